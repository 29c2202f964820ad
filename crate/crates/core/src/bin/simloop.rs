fn main() -> anyhow::Result<()> {
    simloop::harness::cli::main()
}
