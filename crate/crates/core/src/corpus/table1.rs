//! The 117 language pairs of the shared task, grouped by region, and the
//! three training subsets built from them.
//!
//! 74 pairs are original to the task and 43 are extensions added for
//! long-tail languages. Base-146 uses the original pairs that come with
//! bitext; one original pair (`fra-wol`) has none, which leaves 73 pairs.
//! Large-234 uses all 117 pairs. Eval-106 here is a fixed stand-in
//! selection of 53 pairs: every English-centric pair plus 28 others.

use std::collections::BTreeSet;

use super::manifest::{CorpusManifest, DirectionRecord, Subset};
use crate::lang::{Direction, LanguageTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairGroup {
    EngC,
    FraC,
    Ssea,
    Hcea,
    Ngg,
    Ca,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TablePair {
    pub group: PairGroup,
    pub a: LanguageTag,
    pub b: LanguageTag,
    /// Added beyond the original task pairs.
    pub extension: bool,
}

impl TablePair {
    /// The pair as a direction from its first to its second code.
    pub fn direction(&self) -> Direction {
        Direction {
            src: self.a,
            tgt: self.b,
        }
    }
}

const ENGC: &str = "afr-eng amh-eng eng-fra eng-fuv eng-hau eng-ibo eng-kam eng-kin eng-lug \
    eng-luo eng-nso eng-nya eng-orm eng-sna eng-som eng-ssw eng-swh eng-tsn eng-tso eng-umb \
    eng-xho eng-yor eng-zul +eng-lin +eng-wol";
const FRAC: &str =
    "fra-kin fra-lin fra-swh fra-wol +amh-fra +fra-kam +fra-lug +fra-luo +fra-orm +fra-umb";
const SSEA: &str = "+afr-nso +afr-sna afr-ssw afr-tsn afr-xho afr-tso afr-zul nso-sna nso-ssw \
    nso-tsn nso-xho nso-tso nso-zul sna-ssw sna-tsn sna-xho sna-tso sna-zul ssw-tsn ssw-xho \
    ssw-tso ssw-zul tsn-xho tsn-tso tsn-zul tso-xho tso-zul xho-zul";
const HCEA: &str =
    "+amh-luo amh-orm amh-som amh-swh luo-orm luo-som luo-swh orm-som orm-swh som-swh";
const NGG: &str = "fuv-hau fuv-ibo fuv-yor hau-ibo hau-yor ibo-yor";
const CA: &str =
    "+kin-lin kin-lug kin-nya kin-swh +lin-lug +lin-nya +lin-swh lug-nya lug-swh nya-swh";
const OTHER: &str = "+fuv-kin +fuv-nya +fuv-som +fuv-zul +kam-nya +kam-sna +kam-som +kam-swh \
    +kam-tso +kam-zul +kin-yor +lug-sna +lug-zul +luo-nya +luo-sna +luo-zul +nya-umb +nya-yor \
    +sna-umb +sna-yor +som-wol +som-yor +swh-umb +swh-yor +tso-yor +umb-zul +xho-yor +yor-zul";

/// The original pair that ships without bitext.
pub const NO_BITEXT: (&str, &str) = ("fra", "wol");

const EVAL_EXTRA: &str = "fra-kin fra-lin fra-swh fra-wol \
    afr-ssw afr-tsn afr-xho afr-zul nso-sna nso-zul ssw-xho xho-zul \
    amh-orm amh-som amh-swh luo-orm orm-som som-swh \
    fuv-hau fuv-ibo hau-ibo hau-yor \
    kin-lug kin-nya kin-swh lug-nya lug-swh nya-swh";

fn parse_pair(token: &str) -> (LanguageTag, LanguageTag) {
    let (a, b) = token.split_once('-').expect("pair token");
    (a.parse().expect("known code"), b.parse().expect("known code"))
}

/// All 117 pairs in table order.
pub fn pairs() -> Vec<TablePair> {
    [
        (PairGroup::EngC, ENGC),
        (PairGroup::FraC, FRAC),
        (PairGroup::Ssea, SSEA),
        (PairGroup::Hcea, HCEA),
        (PairGroup::Ngg, NGG),
        (PairGroup::Ca, CA),
        (PairGroup::Other, OTHER),
    ]
    .into_iter()
    .flat_map(|(group, list)| {
        list.split_whitespace().map(move |tok| {
            let extension = tok.starts_with('+');
            let (a, b) = parse_pair(tok.trim_start_matches('+'));
            TablePair {
                group,
                a,
                b,
                extension,
            }
        })
    })
    .collect()
}

fn is_no_bitext(p: &TablePair) -> bool {
    (p.a.code(), p.b.code()) == NO_BITEXT
}

/// Pairs in the Eval-106 stand-in selection.
pub fn eval_pairs() -> BTreeSet<Direction> {
    let mut out: BTreeSet<Direction> = pairs()
        .iter()
        .filter(|p| p.group == PairGroup::EngC)
        .map(TablePair::direction)
        .collect();
    out.extend(EVAL_EXTRA.split_whitespace().map(|t| {
        let (a, b) = parse_pair(t);
        Direction { src: a, tgt: b }
    }));
    out
}

/// Subset flags carried by one table pair.
pub fn subsets_of(p: &TablePair, eval: &BTreeSet<Direction>) -> BTreeSet<Subset> {
    let mut s = BTreeSet::from([Subset::Large234]);
    if !p.extension && !is_no_bitext(p) {
        s.insert(Subset::Base146);
    }
    if eval.contains(&p.direction()) {
        s.insert(Subset::Eval106);
    }
    s
}

/// Subset flags of the table pair covering `d` in either direction; empty
/// when the pair is not in the table.
pub fn subsets_for(d: Direction) -> BTreeSet<Subset> {
    let eval = eval_pairs();
    pairs()
        .iter()
        .find(|p| p.direction() == d || p.direction() == d.reversed())
        .map(|p| subsets_of(p, &eval))
        .unwrap_or_default()
}

/// A manifest with one record per table pair (keyed `a-b`, both directions
/// implied). `size_of` supplies the bitext size of each pair.
pub fn table1_manifest(size_of: impl Fn(&TablePair) -> u64) -> CorpusManifest {
    let eval = eval_pairs();
    let directions = pairs()
        .iter()
        .map(|p| {
            (
                p.direction(),
                DirectionRecord {
                    size: size_of(p),
                    shards: Vec::new(),
                    subsets: subsets_of(p, &eval),
                },
            )
        })
        .collect();
    CorpusManifest { directions }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::manifest::enumerate_directions;

    #[test]
    fn group_counts() {
        let all = pairs();
        assert_eq!(all.len(), 117);
        let count = |g, ext| all.iter().filter(|p| p.group == g && p.extension == ext).count();
        assert_eq!(count(PairGroup::EngC, false), 23);
        assert_eq!(count(PairGroup::EngC, true), 2);
        assert_eq!(count(PairGroup::FraC, false), 4);
        assert_eq!(count(PairGroup::FraC, true), 6);
        assert_eq!(count(PairGroup::Ssea, false) + count(PairGroup::Ssea, true), 28);
        assert_eq!(count(PairGroup::Other, true), 28);
        assert_eq!(all.iter().filter(|p| p.extension).count(), 43);
        let unique: BTreeSet<_> = all.iter().map(|p| (p.a, p.b)).collect();
        assert_eq!(unique.len(), 117);
        assert!(all.iter().all(|p| p.a < p.b));
    }

    #[test]
    fn subset_sizes() {
        let m = table1_manifest(|_| 100);
        m.validate(false).unwrap();
        assert_eq!(enumerate_directions(&m, Subset::Base146).unwrap().len(), 146);
        assert_eq!(enumerate_directions(&m, Subset::Large234).unwrap().len(), 234);
        assert_eq!(enumerate_directions(&m, Subset::Eval106).unwrap().len(), 106);
    }
}
