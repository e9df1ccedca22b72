use std::fs;
use std::path::PathBuf;

use leontief::{Mechanism, Tabulated};
use leontief_cli::config::RunConfig;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "{}", dir.display());
    out
}

#[test]
fn tabulated_seeds() {
    for (name, data) in seeds("tabulated_csv") {
        let ok = Tabulated::from_csv_reader(&data[..]).is_ok();
        assert_eq!(ok, !name.starts_with("bad"), "{name}");
    }
}

#[test]
fn mechanism_seeds_round_trip() {
    for (name, data) in seeds("mechanism_json") {
        let s = String::from_utf8(data).unwrap();
        match Mechanism::from_json(&s) {
            Ok(m) => {
                assert!(!name.starts_with("bad"), "{name}");
                let back = Mechanism::from_json(&m.to_json().unwrap()).unwrap();
                assert_eq!(back.to_json().unwrap(), m.to_json().unwrap());
            }
            Err(_) => assert!(name.starts_with("bad"), "{name}"),
        }
    }
}

#[test]
fn run_config_seeds() {
    for (name, data) in seeds("run_config_json") {
        let cfg = RunConfig::from_json(std::str::from_utf8(&data).unwrap()).unwrap();
        assert!(cfg.validate().is_ok(), "{name}");
    }
}
