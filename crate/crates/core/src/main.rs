fn main() {
    if let Err(e) = porous_ldp::app::run(std::env::args_os()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
