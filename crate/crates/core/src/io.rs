//! Line-oriented text formats for chains and tilings.
//!
//! 1-chains serialize as `s1 <TAB> s2 <TAB> value`, one entry per line,
//! with points as their tokens: reduced words over `a..z` (capitals for
//! inverses, `e` for the identity) or comma-separated integer tuples.
//! Values are rationals `p/q`, plain integers, or decimals (parsed exactly).
//! Tilings serialize as `lambda <TAB> point point ...`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::coarse::Relation;
use crate::discrete::{Coeff, GroupPoint, SparseChain1};
use crate::hyperbolic::DiskPoint;
use crate::transport::Tiling;
use crate::window::{SpacePoint, Window};
use crate::{Error, Result};

/// Parse `p/q`, an integer, or a decimal, exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in `{s}`")))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in `{s}`")))?;
        if d == BigInt::from(0) {
            return Err(Error::Parse(format!("zero denominator in `{s}`")));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let sign = if int.trim_start().starts_with('-') { -1 } else { 1 };
        let i: BigInt = if int.is_empty() || int == "-" {
            BigInt::from(0)
        } else {
            int.parse()
                .map_err(|_| Error::Parse(format!("bad decimal in `{s}`")))?
        };
        let f: BigInt = if frac.is_empty() {
            BigInt::from(0)
        } else {
            frac.parse()
                .map_err(|_| Error::Parse(format!("bad decimal in `{s}`")))?
        };
        let den = BigInt::from(10).pow(frac.len() as u32);
        return Ok(BigRational::new(i.clone() * den.clone(), den.clone())
            + BigRational::new(f * BigInt::from(sign), den));
    }
    let n: BigInt = s
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
    Ok(BigRational::from_integer(n))
}

/// Parse a group point token: `e`, a reduced word like `aB`, or an integer
/// tuple like `1,-2`.
pub fn parse_group_token(s: &str) -> Result<GroupPoint> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty point token".into()));
    }
    if s == "e" {
        return Ok(GroupPoint::free_word(vec![]));
    }
    if s.contains(',') || s.chars().all(|c| c.is_ascii_digit() || c == '-') {
        let coords: std::result::Result<Vec<i64>, _> =
            s.split(',').map(|c| c.trim().parse::<i64>()).collect();
        return coords
            .map(GroupPoint::lattice)
            .map_err(|_| Error::Parse(format!("bad lattice token `{s}`")));
    }
    let mut letters = Vec::new();
    for ch in s.chars() {
        if ch.is_ascii_lowercase() {
            letters.push((ch as u8 - b'a') as i32 + 1);
        } else if ch.is_ascii_uppercase() {
            letters.push(-((ch as u8 - b'A') as i32 + 1));
        } else {
            return Err(Error::Parse(format!("bad word token `{s}`")));
        }
    }
    Ok(GroupPoint::free_word(letters))
}

/// Token -> window index lookup table.
pub fn token_index<P: SpacePoint>(w: &Window<P>) -> HashMap<String, usize> {
    w.points()
        .iter()
        .enumerate()
        .map(|(i, p)| (p.token(), i))
        .collect()
}

/// Serialize a 1-chain, one `s1 <TAB> s2 <TAB> value` line per entry.
pub fn write_chain1<K: Coeff + std::fmt::Display, P: SpacePoint>(
    chain: &SparseChain1<K>,
    w: &Window<P>,
) -> Result<String> {
    w.check_id(chain.window())?;
    let mut out = String::new();
    for (&(i, j), v) in chain.entries() {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            w.points()[i].token(),
            w.points()[j].token(),
            v
        ));
    }
    Ok(out)
}

/// Parse 1-chain entries from the tab-separated format onto a group window.
/// Lines starting with `#` and blank lines are skipped.
pub fn read_chain1(
    text: &str,
    w: &Window<GroupPoint>,
    support_entourage: &Relation<GroupPoint>,
) -> Result<SparseChain1<BigRational>> {
    let index = token_index(w);
    let mut entries: BTreeMap<(usize, usize), BigRational> = BTreeMap::new();
    let mut support: BTreeSet<usize> = BTreeSet::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let (Some(a), Some(b), Some(v)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse(format!(
                "line {}: expected `s1<TAB>s2<TAB>value`",
                lineno + 1
            )));
        };
        let pa = parse_group_token(a)?;
        let pb = parse_group_token(b)?;
        let ia = *index
            .get(&pa.token())
            .ok_or_else(|| Error::Parse(format!("line {}: point `{a}` not in window", lineno + 1)))?;
        let ib = *index
            .get(&pb.token())
            .ok_or_else(|| Error::Parse(format!("line {}: point `{b}` not in window", lineno + 1)))?;
        support.insert(ia);
        support.insert(ib);
        entries.insert((ia, ib), parse_rational(v)?);
    }
    SparseChain1::new(w, support, entries, support_entourage)
}

/// Serialize a discrete tiling: `lambda <TAB> point point ...` per lattice
/// point.
pub fn write_tiling<P: SpacePoint>(tiling: &Tiling<P>, w: &Window<P>) -> String {
    let mut out = String::new();
    for (pos, &li) in tiling.lattice().iter().enumerate() {
        let tile: Vec<String> = tiling.tiles()[pos]
            .iter()
            .map(|&x| w.points()[x].token())
            .collect();
        out.push_str(&format!("{}\t{}\n", w.points()[li].token(), tile.join(" ")));
    }
    out
}

/// Serialize a disk tiling by its generating data: the net spacing and the
/// lattice points in tiling order (tiles are membership predicates, so the
/// spacing plus the order reconstructs them).
pub fn write_tiling_disk(tiling: &Tiling<DiskPoint>, w: &Window<DiskPoint>) -> Result<String> {
    let delta = match tiling.base().kind() {
        crate::coarse::RelationKind::MetricRadius(r) => *r,
        _ => {
            return Err(Error::UnsupportedRelation {
                kind: "tiling base",
                reason: "disk tiling serialization needs a metric base".into(),
            })
        }
    };
    let mut out = format!("delta\t{delta}\n");
    for &li in tiling.lattice() {
        out.push_str(&w.points()[li].token());
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::{ratio, z_interval};
    use proptest::prelude::*;

    #[test]
    fn rational_forms() {
        assert_eq!(parse_rational("3/4").unwrap(), ratio(3, 4));
        assert_eq!(parse_rational("-2").unwrap(), ratio(-2, 1));
        assert_eq!(parse_rational("0.25").unwrap(), ratio(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), ratio(-3, 2));
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn group_tokens() {
        assert_eq!(parse_group_token("e").unwrap(), GroupPoint::free_word(vec![]));
        assert_eq!(
            parse_group_token("aB").unwrap(),
            GroupPoint::free_word(vec![1, -2])
        );
        assert_eq!(
            parse_group_token("1,-2").unwrap(),
            GroupPoint::lattice(vec![1, -2])
        );
        assert_eq!(parse_group_token("-3").unwrap(), GroupPoint::lattice(vec![-3]));
    }

    #[test]
    fn chain_roundtrip_z() {
        let w = z_interval(-3, 3);
        let e = Relation::metric_radius(&w, 2.0).unwrap();
        let entries: BTreeMap<(usize, usize), BigRational> =
            [((0usize, 2usize), ratio(3, 7)), ((2, 1), ratio(-1, 2))]
                .into_iter()
                .collect();
        let chain = SparseChain1::new(&w, (0..w.len()).collect(), entries, &e).unwrap();
        let text = write_chain1(&chain, &w).unwrap();
        let back = read_chain1(&text, &w, &e).unwrap();
        assert_eq!(back.entries(), chain.entries());
    }

    proptest! {
        #[test]
        fn rational_roundtrip(n in -999i64..999, d in 1i64..99) {
            let r = ratio(n, d);
            let s = format!("{r}");
            prop_assert_eq!(parse_rational(&s).unwrap(), r);
        }
    }
}
