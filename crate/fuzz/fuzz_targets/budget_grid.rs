#![no_main]

use gibbs_bench::ngrid::{BudgetGrid, MAX_BUDGET, MAX_POINTS};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(grid) = text.parse::<BudgetGrid>() else {
        return;
    };
    let values = grid.values();
    assert!(!values.is_empty() && values.len() <= MAX_POINTS);
    assert!(values[0] >= 1 && values[values.len() - 1] <= MAX_BUDGET);
    assert!(values.windows(2).all(|w| w[0] < w[1]));
    let again: BudgetGrid = grid.to_string().parse().expect("displayed grid parses");
    assert_eq!(again, grid);
});
