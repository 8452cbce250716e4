use attention_cli::error::{EXIT_INPUT, EXIT_OK};
use attention_cli::Cli;
use clap::Parser;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(attention_cli::run(cli));
}
