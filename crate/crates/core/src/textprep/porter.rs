//! Porter suffix-stripping stemmer, following the rule tables of the
//! original 1980 description (steps 1a through 5b).
//!
//! Within a step only the longest matching suffix is considered; if its
//! condition fails the step leaves the word alone. Words of one or two
//! letters and anything that is not plain lowercase ASCII come back
//! unchanged.

fn is_consonant(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_consonant(w, i - 1),
        _ => true,
    }
}

/// Number of VC sequences in `[C](VC)^m[V]`.
fn measure(w: &[u8]) -> usize {
    let n = w.len();
    let mut i = 0;
    while i < n && is_consonant(w, i) {
        i += 1;
    }
    let mut m = 0;
    loop {
        while i < n && !is_consonant(w, i) {
            i += 1;
        }
        if i >= n {
            return m;
        }
        while i < n && is_consonant(w, i) {
            i += 1;
        }
        m += 1;
    }
}

fn has_vowel(w: &[u8]) -> bool {
    (0..w.len()).any(|i| !is_consonant(w, i))
}

fn ends_double_consonant(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1)
}

/// `*o`: stem ends consonant-vowel-consonant, last not w, x or y.
fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && is_consonant(w, n - 3)
        && !is_consonant(w, n - 2)
        && is_consonant(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

/// Longest suffix in `rules` that `w` ends with.
fn longest_match<'a>(w: &[u8], rules: &'a [(&'a str, &'a str)]) -> Option<(&'a str, &'a str)> {
    rules
        .iter()
        .filter(|(suf, _)| w.ends_with(suf.as_bytes()))
        .max_by_key(|(suf, _)| suf.len())
        .copied()
}

/// Replaces the longest matching suffix when `cond(stem)` holds.
fn replace_rule(w: &mut Vec<u8>, rules: &[(&str, &str)], cond: impl Fn(&[u8]) -> bool) -> bool {
    if let Some((suf, rep)) = longest_match(w, rules) {
        let stem_len = w.len() - suf.len();
        if cond(&w[..stem_len]) {
            w.truncate(stem_len);
            w.extend_from_slice(rep.as_bytes());
            return true;
        }
    }
    false
}

fn step1a(w: &mut Vec<u8>) {
    replace_rule(w, &[("sses", "ss"), ("ies", "i"), ("ss", "ss"), ("s", "")], |_| true);
}

fn step1b(w: &mut Vec<u8>) {
    if w.ends_with(b"eed") {
        let stem = w.len() - 3;
        if measure(&w[..stem]) > 0 {
            w.truncate(w.len() - 1);
        }
        return;
    }
    let stripped = [&b"ed"[..], &b"ing"[..]].iter().any(|suf| {
        if w.ends_with(suf) && has_vowel(&w[..w.len() - suf.len()]) {
            w.truncate(w.len() - suf.len());
            true
        } else {
            false
        }
    });
    if !stripped {
        return;
    }
    if w.ends_with(b"at") || w.ends_with(b"bl") || w.ends_with(b"iz") {
        w.push(b'e');
    } else if ends_double_consonant(w) && !matches!(w[w.len() - 1], b'l' | b's' | b'z') {
        w.pop();
    } else if measure(w) == 1 && ends_cvc(w) {
        w.push(b'e');
    }
}

fn step1c(w: &mut Vec<u8>) {
    if w.ends_with(b"y") && has_vowel(&w[..w.len() - 1]) {
        let n = w.len();
        w[n - 1] = b'i';
    }
}

const STEP2: [(&str, &str); 20] = [
    ("ational", "ate"),
    ("tional", "tion"),
    ("enci", "ence"),
    ("anci", "ance"),
    ("izer", "ize"),
    ("abli", "able"),
    ("alli", "al"),
    ("entli", "ent"),
    ("eli", "e"),
    ("ousli", "ous"),
    ("ization", "ize"),
    ("ation", "ate"),
    ("ator", "ate"),
    ("alism", "al"),
    ("iveness", "ive"),
    ("fulness", "ful"),
    ("ousness", "ous"),
    ("aliti", "al"),
    ("iviti", "ive"),
    ("biliti", "ble"),
];

const STEP3: [(&str, &str); 7] = [
    ("icate", "ic"),
    ("ative", ""),
    ("alize", "al"),
    ("iciti", "ic"),
    ("ical", "ic"),
    ("ful", ""),
    ("ness", ""),
];

const STEP4: [(&str, &str); 19] = [
    ("al", ""),
    ("ance", ""),
    ("ence", ""),
    ("er", ""),
    ("ic", ""),
    ("able", ""),
    ("ible", ""),
    ("ant", ""),
    ("ement", ""),
    ("ment", ""),
    ("ent", ""),
    ("ion", ""),
    ("ou", ""),
    ("ism", ""),
    ("ate", ""),
    ("iti", ""),
    ("ous", ""),
    ("ive", ""),
    ("ize", ""),
];

fn step4(w: &mut Vec<u8>) {
    if let Some((suf, _)) = longest_match(w, &STEP4) {
        let stem = &w[..w.len() - suf.len()];
        let ok = measure(stem) > 1
            && (suf != "ion" || matches!(stem.last(), Some(b's') | Some(b't')));
        if ok {
            let n = stem.len();
            w.truncate(n);
        }
    }
}

fn step5a(w: &mut Vec<u8>) {
    if w.ends_with(b"e") {
        let stem = &w[..w.len() - 1];
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            w.pop();
        }
    }
}

fn step5b(w: &mut Vec<u8>) {
    if w.ends_with(b"ll") && measure(w) > 1 {
        w.pop();
    }
}

pub fn porter_stem(word: &str) -> String {
    if word.len() <= 2 || !word.bytes().all(|b| b.is_ascii_lowercase()) {
        return word.to_string();
    }
    let mut w = word.as_bytes().to_vec();
    step1a(&mut w);
    step1b(&mut w);
    step1c(&mut w);
    replace_rule(&mut w, &STEP2, |s| measure(s) > 0);
    replace_rule(&mut w, &STEP3, |s| measure(s) > 0);
    step4(&mut w);
    step5a(&mut w);
    step5b(&mut w);
    // Only ASCII bytes were ever written.
    String::from_utf8(w).expect("ascii")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn measure_examples() {
        for (w, m) in [
            ("tr", 0),
            ("ee", 0),
            ("tree", 0),
            ("y", 0),
            ("by", 0),
            ("trouble", 1),
            ("oats", 1),
            ("trees", 1),
            ("ivy", 1),
            ("troubles", 2),
            ("private", 2),
            ("oaten", 2),
            ("orrery", 2),
        ] {
            assert_eq!(measure(w.as_bytes()), m, "{w}");
        }
    }

    #[test]
    fn step_examples() {
        assert_eq!(porter_stem("caresses"), "caress");
        assert_eq!(porter_stem("ponies"), "poni");
        assert_eq!(porter_stem("coding"), "code");
    }

    #[test]
    fn passthrough_cases() {
        assert_eq!(porter_stem("is"), "is");
        assert_eq!(porter_stem("gr8"), "gr8");
        assert_eq!(porter_stem("Running"), "Running");
        assert_eq!(porter_stem(""), "");
    }

    proptest! {
        #[test]
        fn never_longer(word in "[a-z]{0,14}") {
            prop_assert!(porter_stem(&word).len() <= word.len());
        }
    }
}
