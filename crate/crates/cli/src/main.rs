use std::io::Write;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let out = fermigauss_cli::run(&args);
    // a closed pipe downstream is not an error worth reporting
    if !out.stdout.is_empty() {
        let _ = writeln!(std::io::stdout(), "{}", out.stdout);
    }
    if let Some(msg) = &out.stderr {
        let _ = writeln!(std::io::stderr(), "{msg}");
    }
    std::process::exit(out.code);
}
