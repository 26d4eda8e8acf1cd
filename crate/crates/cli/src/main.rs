fn main() {
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = capforge_cli::run(std::env::args_os(), &mut stdout) {
        eprintln!("{}", e.to_json());
        std::process::exit(e.exit_code());
    }
}
