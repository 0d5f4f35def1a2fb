use sha2::{Digest, Sha256};

use crate::rdf::Iri;

/// Length of the hex suffix of a minted IRI.
pub const MINTED_SUFFIX_LEN: usize = 16;

/// `base_iri + "entity/" + hex16(sha256(members joined by LF))`.
///
/// `members` must already be sorted; the result then depends only on the
/// member set.
pub fn mint_identity(members: &[Iri], base_iri: &str) -> Iri {
    debug_assert!(!members.is_empty());
    debug_assert!(members.windows(2).all(|w| w[0] < w[1]), "members must be sorted");
    let mut hasher = Sha256::new();
    for (i, m) in members.iter().enumerate() {
        if i > 0 {
            hasher.update(b"\n");
        }
        hasher.update(m.as_str().as_bytes());
    }
    let digest = hex::encode(hasher.finalize());
    Iri::parse(&format!("{base_iri}entity/{}", &digest[..MINTED_SUFFIX_LEN]))
        .expect("base_iri is a valid IRI prefix")
}

/// The hex suffix of a minted IRI, if it has the minted shape.
pub fn minted_suffix<'a>(minted: &'a Iri, base_iri: &str) -> Option<&'a str> {
    let suffix = minted.as_str().strip_prefix(base_iri)?.strip_prefix("entity/")?;
    (suffix.len() == MINTED_SUFFIX_LEN && suffix.bytes().all(|b| b.is_ascii_hexdigit())).then_some(suffix)
}
