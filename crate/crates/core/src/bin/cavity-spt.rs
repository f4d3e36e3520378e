fn main() -> std::process::ExitCode {
    cavity_spt::cli::main()
}
