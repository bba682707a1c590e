#![no_main]

use libfuzzer_sys::fuzz_target;
use prmimo::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = RunConfig::from_text(text) else { return };
    let dumped: String = cfg.to_key_values().into_iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    let reparsed = RunConfig::from_text(&dumped).expect("dumped config must parse");
    assert_eq!(reparsed.to_key_values(), cfg.to_key_values());
    let _ = cfg.scenario();
});
