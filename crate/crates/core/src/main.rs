fn main() {
    std::process::exit(varpedis::cli::main());
}
