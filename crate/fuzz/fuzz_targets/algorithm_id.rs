#![no_main]

use gibbs_bench::spec::Mode;
use gibbs_core::estimators::Estimator;
use gibbs_core::metrics::Metric;
use gibbs_core::samplers::SamplerKind;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(e) = text.parse::<Estimator>() {
        assert_eq!(e.id(), text);
    }
    if let Ok(s) = text.parse::<SamplerKind>() {
        assert_eq!(s.id(), text);
    }
    if let Ok(m) = text.parse::<Metric>() {
        assert_eq!(m.id(), text);
    }
    if let Ok(m) = text.parse::<Mode>() {
        assert_eq!(m.id(), text);
    }
});
