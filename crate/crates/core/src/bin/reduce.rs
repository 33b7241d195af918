fn main() -> std::process::ExitCode {
    qcreduce::cli::run_from_args()
}
