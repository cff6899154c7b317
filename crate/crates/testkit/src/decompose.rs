use crate::segment;

/// One piece of a reference decomposition. `start` is the char offset in
/// the text, or `None` for a dictionary word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub text: String,
    pub start: Option<usize>,
}

/// Brute force over every (title prefix length, text position) pair.
///
/// At each title position the longest run of title tokens that equals some
/// token-aligned substring of the text wins, at its first occurrence. When
/// no text match exists a single letter-run token found (lowercased) in
/// `dictionary` is consumed instead.
pub fn decompose(title: &str, text: &str, dictionary: &[&str]) -> Option<Vec<Piece>> {
    let title_tokens = segment::tokens(title);
    let text_chars: Vec<char> = text.chars().collect();
    let bounds = segment::boundaries(text);
    let mut out = Vec::new();
    let mut q = 0;
    while q < title_tokens.len() {
        let mut best: Option<(usize, usize)> = None;
        for k in q + 1..=title_tokens.len() {
            let piece: Vec<char> = title_tokens[q..k].concat().chars().collect();
            for &p in &bounds {
                let end = p + piece.len();
                if end > text_chars.len() || !bounds.contains(&end) {
                    continue;
                }
                if text_chars[p..end] == piece[..] {
                    let better = match best {
                        None => true,
                        Some((bk, bp)) => k > bk || (k == bk && p < bp),
                    };
                    if better {
                        best = Some((k, p));
                    }
                }
            }
        }
        match best {
            Some((k, p)) => {
                out.push(Piece {
                    text: title_tokens[q..k].concat(),
                    start: Some(p),
                });
                q = k;
            }
            None => {
                let tok = &title_tokens[q];
                let letters = tok.chars().all(segment::is_letter);
                if letters && dictionary.contains(&tok.to_lowercase().as_str()) {
                    out.push(Piece {
                        text: tok.clone(),
                        start: None,
                    });
                    q += 1;
                } else {
                    return None;
                }
            }
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        let got = decompose("ab ab c", "x ab c y ab z", &[]).unwrap();
        let texts: Vec<_> = got.iter().map(|p| p.text.as_str()).collect();
        assert_eq!(texts, ["ab ", "ab c"]);
        assert_eq!(got[0].start, Some(2));
        assert!(decompose("abc", "ab c", &[]).is_none());
        let d = decompose("Says x", "a x", &["says"]).unwrap();
        assert_eq!(d[0].start, None);
    }
}
