use entropy_mp::cli::run_command;

fn main() {
    let out = run_command(std::env::args_os());
    if !out.stdout.is_empty() {
        println!("{}", out.stdout);
    }
    if !out.stderr.is_empty() {
        eprintln!("{}", out.stderr);
    }
    std::process::exit(out.code);
}
