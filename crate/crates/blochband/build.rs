fn main() {
    // lapack-sys declares the prototypes but links nothing; the system
    // OpenBLAS carries the full LAPACK (zheevd_ &c).
    println!("cargo:rustc-link-lib=dylib=openblas");
}
