fn main() -> std::process::ExitCode {
    axisaddle::cli::main()
}
