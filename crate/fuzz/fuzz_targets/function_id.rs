#![no_main]

use gibbs_core::FunctionId;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(id) = text.parse::<FunctionId>() else {
        return;
    };
    let shown = id.to_string();
    let again: FunctionId = shown.parse().expect("displayed id parses");
    assert_eq!(again, id, "{shown}");
    let f = id.build();
    assert_eq!(f.dim(), id.dim());
    let centre = vec![0.5; f.dim()];
    assert!(!f.evaluate(&centre).is_nan());
});
