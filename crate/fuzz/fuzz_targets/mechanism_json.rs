#![no_main]
use leontief::Mechanism;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(m) = Mechanism::from_json(s) {
        // anything accepted must survive a round trip
        let text = m.to_json().expect("accepted mechanism serializes");
        Mechanism::from_json(&text).expect("serialized mechanism parses");
    }
});
