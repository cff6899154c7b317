use std::sync::OnceLock;

use regex::Regex;

fn token_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)\p{L}+|\p{Nd}+|.").expect("static pattern"))
}

/// Token strings by regex: letter runs, decimal-digit runs, or one char.
pub fn tokens(s: &str) -> Vec<String> {
    token_re()
        .find_iter(s)
        .map(|m| m.as_str().to_owned())
        .collect()
}

/// Char offsets where a token starts, plus the total char length.
pub fn boundaries(s: &str) -> Vec<usize> {
    let mut out = vec![0];
    let mut pos = 0;
    for t in tokens(s) {
        pos += t.chars().count();
        out.push(pos);
    }
    out
}

pub fn is_letter(c: char) -> bool {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"^\p{L}$").expect("static pattern"));
    re.is_match(c.encode_utf8(&mut [0; 4]))
}

pub fn is_digit(c: char) -> bool {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"^\p{Nd}$").expect("static pattern"));
    re.is_match(c.encode_utf8(&mut [0; 4]))
}
