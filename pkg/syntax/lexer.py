"""
WGSL tokenizer.

Maximal munch over the subset's punctuation; comments and whitespace are
dropped. Anything the lexer cannot classify becomes an 'error' token so the
parser can wrap it in an error node instead of giving up. Lexing the text of
any produced token on its own yields that same token, which is what makes
unparse/parse round trips exact.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple, Union


# Longest first within each length class
PUNCTUATION = (
    '>>=', '<<=',
    '&&', '||', '==', '!=', '<=', '>=', '<<', '>>', '->', '++', '--',
    '+=', '-=', '*=', '/=', '%=', '&=', '|=', '^=',
    '(', ')', '{', '}', '[', ']', ';', ':', ',', '.', '@', '=', '<', '>',
    '+', '-', '*', '/', '%', '&', '|', '^', '!', '~',
)
_PUNCT_BY_FIRST = {}
for _p in PUNCTUATION:
    _PUNCT_BY_FIRST.setdefault(_p[0], []).append(_p)
for _lst in _PUNCT_BY_FIRST.values():
    _lst.sort(key=len, reverse=True)

KEYWORDS = frozenset({
    'alias', 'break', 'case', 'const', 'const_assert', 'continue', 'continuing',
    'default', 'diagnostic', 'discard', 'else', 'enable', 'false', 'fn', 'for',
    'if', 'let', 'loop', 'override', 'requires', 'return', 'struct', 'switch',
    'true', 'var', 'while',
})

DECIMAL_DIGITS = frozenset('0123456789')
HEX_DIGITS = frozenset('0123456789abcdefABCDEF')

# WGSL blankspace set
WHITESPACE = frozenset(' \t\r\n\v\f\u0085\u200e\u200f\u2028\u2029')


@dataclass
class Token:
    kind: str  # 'ident' | 'keyword' | 'int' | 'float' | 'punct' | 'error' | 'eof'
    text: str
    offset: int

    def is_punct(self, text: str) -> bool:
        return self.kind == 'punct' and self.text == text

    def is_keyword(self, text: str) -> bool:
        return self.kind == 'keyword' and self.text == text


def _is_ident_start(ch: str) -> bool:
    return ch == '_' or ch.isalpha()


def _is_ident_char(ch: str) -> bool:
    return ch == '_' or ch.isalnum()


class Lexer:
    """Single-pass tokenizer; `tracer` (optional) receives branch-site hits."""

    def __init__(self, source: str, tracer=None):
        self.src = source
        self.pos = 0
        self._hit = tracer.hit if tracer is not None else None

    def _trace(self, site: str):
        if self._hit is not None:
            self._hit(site)

    def tokenize(self) -> List[Token]:
        tokens = []
        src = self.src
        n = len(src)
        while True:
            self._skip_trivia()
            if self.pos >= n:
                tokens.append(Token('eof', '', n))
                return tokens
            tok = self._next_token()
            if tok is not None:
                tokens.append(tok)

    # ------------------------------------------------------------------

    def _skip_trivia(self):
        src = self.src
        n = len(src)
        while self.pos < n:
            ch = src[self.pos]
            if ch in WHITESPACE:
                self.pos += 1
            elif src.startswith('//', self.pos):
                self._trace('lexer.line_comment')
                end = src.find('\n', self.pos)
                self.pos = n if end < 0 else end + 1
            elif src.startswith('/*', self.pos):
                if not self._skip_block_comment():
                    return
            else:
                return

    def _skip_block_comment(self) -> bool:
        """Skip a (nesting) block comment; leave pos untouched if unterminated."""
        src = self.src
        i = self.pos + 2
        depth = 1
        while i < len(src):
            if src.startswith('/*', i):
                depth += 1
                i += 2
            elif src.startswith('*/', i):
                depth -= 1
                i += 2
                if depth == 0:
                    self._trace('lexer.block_comment')
                    self.pos = i
                    return True
            else:
                i += 1
        self._trace('lexer.block_comment.unterminated')
        return False

    def _next_token(self) -> Optional[Token]:
        src = self.src
        start = self.pos
        ch = src[start]

        if src.startswith('/*', start):
            # unterminated comment: swallow the rest as one error token
            self.pos = len(src)
            return Token('error', src[start:], start)

        if _is_ident_start(ch):
            i = start + 1
            while i < len(src) and _is_ident_char(src[i]):
                i += 1
            self.pos = i
            text = src[start:i]
            if text in KEYWORDS:
                self._trace('lexer.keyword')
                return Token('keyword', text, start)
            self._trace('lexer.ident')
            return Token('ident', text, start)

        if ch.isdigit() and ch.isascii() or (ch == '.' and start + 1 < len(src) and src[start + 1] in DECIMAL_DIGITS):
            return self._number()

        for punct in _PUNCT_BY_FIRST.get(ch, ()):
            if src.startswith(punct, start):
                self._trace('lexer.punct.long' if len(punct) > 1 else 'lexer.punct')
                self.pos = start + len(punct)
                return Token('punct', punct, start)

        self._trace('lexer.error_char')
        self.pos = start + 1
        return Token('error', ch, start)

    def _digits(self, i: int) -> int:
        src = self.src
        while i < len(src) and src[i].isascii() and src[i].isdigit():
            i += 1
        return i

    def _number(self) -> Token:
        src = self.src
        n = len(src)
        start = self.pos

        if src.startswith(('0x', '0X'), start) and start + 2 < n and src[start + 2] in HEX_DIGITS:
            i = start + 2
            while i < n and src[i] in HEX_DIGITS:
                i += 1
            if i < n and src[i] in 'iu':
                i += 1
            self._trace('lexer.number.hex')
            self.pos = i
            return Token('int', src[start:i], start)

        is_float = False
        i = self._digits(start)
        if i < n and src[i] == '.':
            is_float = True
            i = self._digits(i + 1)
        if i < n and src[i] in 'eE':
            j = i + 1
            if j < n and src[j] in '+-':
                j += 1
            if j < n and src[j].isascii() and src[j].isdigit():
                is_float = True
                i = self._digits(j)
                self._trace('lexer.number.exponent')
        if i < n:
            suffix = src[i]
            if suffix in 'fh':
                is_float = True
                i += 1
                self._trace('lexer.number.float_suffix')
            elif suffix in 'iu' and not is_float:
                i += 1
                self._trace('lexer.number.int_suffix')
        self.pos = i
        if is_float:
            self._trace('lexer.number.float')
            return Token('float', src[start:i], start)
        # leading zeros are not valid WGSL but still one token
        if i - start > 1 and src[start] == '0' and src[start + 1].isdigit():
            self._trace('lexer.number.leading_zero')
        self._trace('lexer.number.int')
        return Token('int', src[start:i], start)


def tokenize(source: str, tracer=None) -> List[Token]:
    return Lexer(source, tracer).tokenize()


def number_value(text: str) -> Tuple[Union[int, float], str]:
    """Value and kind of a numeric literal token.

    Kinds are the suffix kinds 'i32' / 'u32' / 'f32' / 'f16', or 'aint' /
    'afloat' for unsuffixed (abstract) literals.

    Raises:
        ValueError: If the text is not a valid WGSL numeric literal
    """
    if text[:2] in ('0x', '0X'):
        digits, kind = text[2:], 'aint'
        if digits[-1:] in ('i', 'u'):
            digits, kind = digits[:-1], digits[-1] + '32'
        return int(digits, 16), kind
    suffix = text[-1:]
    body = text[:-1] if suffix in ('i', 'u', 'f', 'h') else text
    is_float = suffix in ('f', 'h') or '.' in body or 'e' in body or 'E' in body
    if is_float:
        kind = {'f': 'f32', 'h': 'f16'}.get(suffix, 'afloat')
        return float(body), kind
    if len(body) > 1 and body[0] == '0':
        raise ValueError(f"leading zero in integer literal '{text}'")
    kind = {'i': 'i32', 'u': 'u32'}.get(suffix, 'aint')
    return int(body), kind
