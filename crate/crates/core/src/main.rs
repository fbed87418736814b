use std::io;

use tow_bombe::cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(cli::LOG_ENV, "warn")).init();
    let code = cli::run(std::env::args_os(), &mut io::stdout().lock());
    std::process::exit(code);
}
