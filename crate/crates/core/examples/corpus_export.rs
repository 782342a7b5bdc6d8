//! Lists the embedded fixtures and writes them to a directory.

use dynrbac::corpus::{corpus_manifest, export};

fn main() -> std::io::Result<()> {
    for f in corpus_manifest() {
        println!("{:<14} {:?} {:?}", f.path, f.outcome, f.reachable);
    }
    let dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("rms-corpus"));
    for p in export(&dir)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
