//! Replays the checked-in fuzz corpus through the same checks the fuzz
//! targets make, so parser regressions surface without a fuzzing toolchain.

use std::fs;
use std::path::PathBuf;

use gibbs_bench::ngrid::{BudgetGrid, MAX_BUDGET, MAX_POINTS};
use gibbs_bench::spec::Mode;
use gibbs_core::estimators::Estimator;
use gibbs_core::metrics::Metric;
use gibbs_core::samplers::SamplerKind;
use gibbs_core::FunctionId;

fn corpus(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut entries: Vec<(String, Vec<u8>)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            (path.display().to_string(), fs::read(&path).unwrap())
        })
        .collect();
    entries.sort();
    assert!(!entries.is_empty(), "empty corpus for {target}");
    entries
}

#[test]
fn function_id_corpus() {
    let mut accepted = 0;
    for (name, data) in corpus("function_id") {
        let Ok(text) = std::str::from_utf8(&data) else {
            continue;
        };
        let Ok(id) = text.parse::<FunctionId>() else {
            continue;
        };
        let shown = id.to_string();
        let again: FunctionId = shown
            .parse()
            .unwrap_or_else(|e| panic!("{name}: {shown}: {e}"));
        assert_eq!(again, id, "{name}");
        let f = id.build();
        assert_eq!(f.dim(), id.dim());
        assert!(!f.evaluate(&vec![0.5; f.dim()]).is_nan(), "{name}");
        accepted += 1;
    }
    assert!(accepted >= 8);
}

#[test]
fn budget_grid_corpus() {
    let mut accepted = 0;
    for (name, data) in corpus("budget_grid") {
        let Ok(text) = std::str::from_utf8(&data) else {
            continue;
        };
        let Ok(grid) = text.parse::<BudgetGrid>() else {
            continue;
        };
        let v = grid.values();
        assert!(!v.is_empty() && v.len() <= MAX_POINTS, "{name}");
        assert!(v[0] >= 1 && v[v.len() - 1] <= MAX_BUDGET, "{name}");
        assert!(v.windows(2).all(|w| w[0] < w[1]), "{name}");
        assert_eq!(
            grid.to_string().parse::<BudgetGrid>().unwrap(),
            grid,
            "{name}"
        );
        accepted += 1;
    }
    assert!(accepted >= 5);
}

#[test]
fn algorithm_id_corpus() {
    let mut accepted = 0;
    for (name, data) in corpus("algorithm_id") {
        let Ok(text) = std::str::from_utf8(&data) else {
            continue;
        };
        let hits = [
            text.parse::<Estimator>().map(|e| e.id()),
            text.parse::<SamplerKind>().map(|s| s.id()),
            text.parse::<Metric>().map(|m| m.id()),
        ];
        for id in hits.into_iter().flatten() {
            assert_eq!(id, text, "{name}");
            accepted += 1;
        }
        if let Ok(m) = text.parse::<Mode>() {
            assert_eq!(m.id(), text, "{name}");
            accepted += 1;
        }
    }
    assert!(accepted >= 15);
}
