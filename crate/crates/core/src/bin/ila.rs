fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("ILA_LOG")).init();
    std::process::exit(ila::cli::run(std::env::args_os()));
}
