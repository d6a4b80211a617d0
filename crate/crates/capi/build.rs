fn main() {
    println!("cargo:rerun-if-changed=build.rs");
    println!("cargo:rerun-if-changed=src/lib.rs");

    #[cfg(feature = "generate-header")]
    {
        let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("cargo sets manifest dir");
        match cbindgen::generate(&crate_dir) {
            Ok(bindings) => {
                bindings.write_to_file(format!("{crate_dir}/include/acsim.h"));
            }
            Err(e) => println!("cargo:warning=cbindgen failed: {e}"),
        }
    }
}
