fn main() {
    std::process::exit(servo_smc::cli::main_from(std::env::args_os()));
}
