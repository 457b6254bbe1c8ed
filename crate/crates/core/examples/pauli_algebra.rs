//! Pauli strings, products, commutation and Hamiltonian parsing.

use zne_lab::pauli::{dense_matrix, PauliString, PauliSum};

fn main() -> zne_lab::Result<()> {
    let a: PauliString = "XYZ".parse()?;
    let b: PauliString = "ZZI".parse()?;
    let (phase, product) = a.multiply(&b)?;
    println!("{a} * {b} = ({}) {product}", phase.to_complex());
    println!("commute: {}", a.commutes_with(&b));

    let h = PauliSum::parse("0.5 ZZ\n-0.25 XI\n-0.25 IX\n")?;
    let m = dense_matrix(&h, 2)?;
    let eig = m.clone().symmetric_eigenvalues();
    println!("H = {}", h.to_text().trim().replace('\n', " + "));
    println!("eigenvalues: {:?}", eig.as_slice());
    Ok(())
}
