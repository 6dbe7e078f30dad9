//! Pull `sin(2πx¹) dx¹∧dx²∧dx³` on the flat 3-torus back from the block
//! form on R^36 and print the verification report.

use univform::covering::{nash_cover, CoverParams};
use univform::immersion::{assemble, verify, VerifyParams};
use univform::smoothfn::parse;
use univform::{fixtures, DifferentialForm, IndexTuple};

fn main() -> univform::Result<()> {
    let phi = DifferentialForm::from_terms(3, 2, [(IndexTuple::new(vec![1, 2], 3)?, parse("-cos(2*pi*x1)/(2*pi)", 3)?)])?;
    let omega = phi.exterior_d()?;
    let cover = nash_cover(&fixtures::bcc_torus(3), &CoverParams::default())?;
    println!("{} balls in {} families", cover.ball_count(), cover.families.len());
    let a = assemble(&cover, &phi, Some(&omega))?;
    let r = verify(&a, &omega, &VerifyParams::default())?;
    println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
    Ok(())
}
