//! Two models summed into one scorer; λ defaults to 0.5 per member count.

use lmbr_beam::scorer::combine_ensemble;
use lmbr_beam::synthetic::{random_recorded, rng};
use lmbr_beam::{decode, DecoderConfig, Lambda, Scorer, TokenId};

fn main() -> lmbr_beam::Result<()> {
    let mut r = rng(3);
    let a = random_recorded(&mut r, 6, 4);
    let b = random_recorded(&mut r, 6, 4);
    let cfg = DecoderConfig {
        beam_size: 4,
        max_steps_slope: 1.0,
        max_steps_offset: 3.0,
        ..DecoderConfig::default()
    };
    let src = [TokenId(2)];
    let ra = decode(&src, &a, None, &cfg, None)?;
    let rb = decode(&src, &b, None, &cfg, None)?;
    let both = combine_ensemble(vec![Box::new(a), Box::new(b)])?;
    let re = decode(&src, &both, None, &cfg, None)?;
    println!("model a:  {:?} {:.4}", ra.tokens, ra.score);
    println!("model b:  {:?} {:.4}", rb.tokens, rb.score);
    println!("ensemble: {:?} {:.4}", re.tokens, re.score);
    println!("members {}, auto lambda {}", both.members(), Lambda::Auto.resolve(both.members()));
    Ok(())
}
