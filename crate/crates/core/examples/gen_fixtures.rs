//! Regenerates the files under `fixtures/`.
//!
//! ```text
//! cargo run -p hi-sim --example gen_fixtures [-- <dir>]
//! ```

use std::path::PathBuf;

fn main() -> hi_sim::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    for (name, contents) in hi_sim::fixtures::rendered_files()? {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| hi_sim::Error::Io {
            path: path.clone(),
            source: e,
        })?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
