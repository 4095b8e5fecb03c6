use clap::Parser;
use fading_product::cli::{resolve, run, Cli};
use fading_product::Error;

fn main() {
    let cli = Cli::parse();
    let spec = match resolve(&cli) {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    match run(&spec) {
        Ok(output) => {
            print!("{}", output.stdout);
            for f in &output.files_written {
                eprintln!("wrote {}", f.display());
            }
            if output.validation_passed == Some(false) {
                std::process::exit(3);
            }
        }
        Err(e @ Error::InvalidSpec(_)) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(3);
        }
    }
}
