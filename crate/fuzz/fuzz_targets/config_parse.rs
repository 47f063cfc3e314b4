#![no_main]

use gpe_cli::config::{parse_config, parse_override};
use gpe_cli::scenario::{defaults, merge};
use gpe_cli::Scenario;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_override(text);
    if let Ok(parsed) = parse_config(text) {
        let mut map = defaults();
        if merge(&mut map, parsed).is_ok() {
            if let Ok(sc) = Scenario::from_map(&map) {
                // the rendered config must load back to the same scenario
                let again = parse_config(sc.resolved()).expect("resolved config parses");
                let mut map2 = defaults();
                merge(&mut map2, again).expect("resolved keys are known");
                assert_eq!(Scenario::from_map(&map2).expect("resolved config loads").resolved(), sc.resolved());
            }
        }
    }
});
