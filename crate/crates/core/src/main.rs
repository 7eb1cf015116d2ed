fn main() -> std::process::ExitCode {
    travisgo::cli::main()
}
