//! Regenerates the demo fixture: `cargo run -p mtkit-cli --example make_demo -- fixtures/demo`.

use std::path::PathBuf;

fn main() {
    let dir: PathBuf = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("fixtures/demo"));
    if let Err(e) = mtkit_cli::demo::write_demo_fixture(&dir) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
