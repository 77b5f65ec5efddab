//! Fuzzes the flat key-value config parser: arbitrary text must never
//! panic, and anything that parses must render and reparse to the same
//! config.

#![no_main]

use kac_walk::config::{parse_config_text, render_config_text};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = parse_config_text(text) else { return };
    let rendered = render_config_text(&cfg);
    let back = parse_config_text(&rendered).expect("rendered config must reparse");
    assert_eq!(back, cfg, "render/parse round trip changed the config");
});
