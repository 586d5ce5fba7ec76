fn main() -> std::process::ExitCode {
    powerdiv_cli::cli_main()
}
