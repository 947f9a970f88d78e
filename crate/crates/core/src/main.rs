fn main() -> std::process::ExitCode {
    valley::cli::main_entry()
}
