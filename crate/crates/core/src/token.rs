//! Capability tokens.
//!
//! Free-text property values such as `"Ethereum PoA (Clique)"` or `"ARMv7"`
//! are normalized into lowercase hyphen-separated tokens before any
//! capability comparison happens.

/// Normalizes a free-text value into a capability token.
///
/// Lowercases, then treats every run of non-alphanumeric characters as a
/// single `-` separator, with leading and trailing separators dropped.
///
/// ```
/// use netforge_core::token::normalize;
/// assert_eq!(normalize("Ethereum PoA (Clique)"), "ethereum-poa-clique");
/// assert_eq!(normalize("  X64 "), "x64");
/// ```
pub fn normalize(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_sep = false;
    for ch in raw.chars() {
        if ch.is_alphanumeric() {
            if pending_sep && !out.is_empty() {
                out.push('-');
            }
            pending_sep = false;
            out.extend(ch.to_lowercase());
        } else {
            pending_sep = true;
        }
    }
    out
}

/// True when one token's segment sequence is a prefix of the other's.
///
/// `ethereum-poa` matches `ethereum-poa-clique` and `ethereum` matches
/// `ethereum-pow`, but `poa` never matches `ethereum-poa` and `pow` never
/// matches `power`. Empty tokens match nothing.
pub fn prefix_match(a: &str, b: &str) -> bool {
    if a.is_empty() || b.is_empty() {
        return false;
    }
    let mut left = a.split('-');
    let mut right = b.split('-');
    loop {
        match (left.next(), right.next()) {
            (Some(x), Some(y)) if x == y => continue,
            (Some(_), Some(_)) => return false,
            _ => return true,
        }
    }
}

/// True when `token` prefix-matches any member of `set`.
pub fn matches_any<'a, I>(token: &str, set: I) -> bool
where
    I: IntoIterator<Item = &'a String>,
{
    set.into_iter().any(|candidate| prefix_match(token, candidate))
}
