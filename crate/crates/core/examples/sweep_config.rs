//! Builds a sweep configuration in memory and prints the CSV the binary would write.
use qentcap::cli;

fn main() -> qentcap::Result<()> {
    let spec = cli::parse_config(
        r#"{
            "command": "vc-sweep",
            "inputs": {"spectrum": {"model": "geometric", "ratio": 0.5}},
            "grid": {"start": 0.5, "stop": 3.0, "step": 0.5},
            "tol": 1e-10
        }"#,
    )?;
    print!("{}", cli::execute(&spec, 2)?.render(&spec));
    Ok(())
}
