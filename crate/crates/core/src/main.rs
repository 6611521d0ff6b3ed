use std::process::ExitCode;

fn main() -> ExitCode {
    let (text, code) = mutalg::cli::run(std::env::args().collect());
    if code == 2 {
        eprint!("{text}");
    } else {
        print!("{text}");
    }
    ExitCode::from(code as u8)
}
