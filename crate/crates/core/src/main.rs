fn main() {
    std::process::exit(vrident::cli::main_entry());
}
