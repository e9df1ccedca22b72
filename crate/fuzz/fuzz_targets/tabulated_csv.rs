#![no_main]
use leontief::Tabulated;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = Tabulated::from_csv_reader(data);
});
