use std::io::Write;

fn main() {
    let run = claw::corpus::cli::run_command(std::env::args_os());
    print!("{}", run.stdout);
    let _ = std::io::stdout().flush();
    eprint!("{}", run.stderr);
    std::process::exit(run.code);
}
