fn main() {
    let arg = std::env::args().nth(1).unwrap();
    let csr = unsafe { std::arch::x86_64::_mm_getcsr() };
    let f = std::fs::File::open(arg).unwrap();
    let p = ckls::io::read_path_csv(std::io::BufReader::new(f)).unwrap();
    let fit = ckls::estimate::fit_path(&p, 0.5).unwrap();
    println!("mxcsr {:#x} beta2 bits {:x} value {}", csr, fit.beta2_hat.to_bits(), fit.beta2_hat);
}
