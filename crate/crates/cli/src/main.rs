use qpg_cli::commands;

fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    if let Err(err) = commands::run(&argv) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
