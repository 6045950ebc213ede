use std::process::ExitCode;

fn main() -> ExitCode {
    let vars: Vec<(String, String)> = std::env::vars().collect();
    let code = iacv_cli::run(
        std::env::args_os(),
        &vars,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    ExitCode::from(code)
}
