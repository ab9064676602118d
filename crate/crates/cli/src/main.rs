fn main() {
    println!("rowsim");
}
