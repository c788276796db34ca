//! Writes the bundled test stories to disk: `cargo run --example make_fixture -- out/`

use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("box.z3"), zmachine::fixture::box_game(0))?;
    std::fs::write(dir.join("hello.z3"), zmachine::fixture::hello_story())?;
    println!("wrote box.z3 and hello.z3 to {}", dir.display());
    Ok(())
}
