//! Writes the scripted scenarios (mesh and TOML config) into a directory.
//!
//! cargo run -p hedac-cli --example make_scenarios -- scenarios/

use std::path::PathBuf;

use hedac_core::scenarios;

fn main() {
    let dir: PathBuf = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("scenarios"));
    for s in scenarios::all() {
        match s.write(&dir) {
            Ok(p) => println!("{}", p.display()),
            Err(e) => {
                eprintln!("error: {e}");
                std::process::exit(1);
            }
        }
    }
}
