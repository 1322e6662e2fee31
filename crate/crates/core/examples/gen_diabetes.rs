//! Writes the synthetic diabetes table used by the tests and the README.
//!
//! `cargo run -p forest-explain --example gen_diabetes -- data/diabetes.csv`

use forest_explain::synth::diabetes_like;
use forest_explain::Data;

fn main() -> forest_explain::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "data/diabetes.csv".into());
    let data: Data = diabetes_like(768, 20_240_101);
    data.save_csv(&path, "class")?;
    println!("wrote {} rows to {path}", data.len());
    Ok(())
}
