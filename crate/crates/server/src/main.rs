fn main() -> std::process::ExitCode {
    iscore_server::cli::main()
}
