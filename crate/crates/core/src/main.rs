fn main() -> std::process::ExitCode {
    lmbr_beam::cli::main()
}
