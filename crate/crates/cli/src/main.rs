use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let system = miniform_cli::system_settings_path();
    let code = miniform_cli::main_with(
        std::env::args_os().skip(1),
        Some(&system),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    ExitCode::from(code as u8)
}
