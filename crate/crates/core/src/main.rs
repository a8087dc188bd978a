use std::path::PathBuf;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let output_dir = std::env::var_os("WEAKSHIFT_OUTPUT_DIR").map(PathBuf::from);
    let code = weakshift::cli::run(&args, output_dir.as_deref(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
