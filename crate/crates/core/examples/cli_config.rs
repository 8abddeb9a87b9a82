//! Drives the command-line front end from code with a TOML configuration.
//!
//! cargo run --release --example cli_config

fn main() {
    let dir = std::env::temp_dir().join("kpp-stefan-example");
    let config = dir.join("vanish.toml");
    std::fs::create_dir_all(&dir).expect("temp dir");
    std::fs::write(
        &config,
        r#"
[problem]
family = "beverton_holt"
p = 2.0
q = 1.0
d = 1.0
tau = 1.0
mu = 1.0

[initial]
g0 = -0.75
h0 = 0.75
amplitude = 1e-3

[numerics]
n_cells = 100
t_end = 100.0
"#,
    )
    .expect("write config");
    let out = dir.join("out");
    let args = [
        "kpp-stefan",
        "classify",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    let code = kpp_stefan::cli::run(args);
    std::process::exit(code);
}
