use std::io;

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let code = dynrbac::cli::run(&argv, &mut io::stdin().lock(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
