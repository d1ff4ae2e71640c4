"""
Error-recovering recursive-descent parser for the WGSL subset.

The parser never aborts on bad input. Tokens it cannot place are collected
into ERROR nodes (panic-mode recovery) and missing tokens are recorded as
diagnostics, so every input maps to a tree that covers it completely. The
result is a pure function of the token sequence; since unparse reproduces
that sequence, reparsing unparsed output yields an equal tree.
"""

import sys
from typing import List, Optional, Union

from config.config import MAX_SOURCE_BYTES, MAX_PARSE_NESTING, PARSER_RECURSION_LIMIT
from syntax.lexer import Token, tokenize
from syntax.nodes import AstNode, AstTree, Diagnostic, NodeKind


class ParseFailure(Exception):
    """Input cannot be parsed at all (empty or over the size limit)."""


# Names whose '<' starts a template list rather than a comparison
TYPE_GENERATORS = frozenset({
    'vec2', 'vec3', 'vec4', 'array', 'ptr', 'atomic',
    'mat2x2', 'mat2x3', 'mat2x4', 'mat3x2', 'mat3x3', 'mat3x4',
    'mat4x2', 'mat4x3', 'mat4x4',
})

# binary operator -> precedence (higher binds tighter)
BINARY_PRECEDENCE = {
    '||': 1, '&&': 2, '|': 3, '^': 4, '&': 5,
    '==': 6, '!=': 6,
    '<': 7, '>': 7, '<=': 7, '>=': 7,
    '<<': 8, '>>': 8,
    '+': 9, '-': 9,
    '*': 10, '/': 10, '%': 10,
}
UNARY_OPERATORS = frozenset({'-', '!', '~', '*', '&'})
ASSIGN_OPERATORS = frozenset({'=', '+=', '-=', '*=', '/=', '%=', '&=', '|=', '^=', '<<=', '>>='})

GLOBAL_SYNC = frozenset({'fn', 'struct', 'var', 'const', 'override', 'alias'})
STATEMENT_SYNC = frozenset({
    'var', 'let', 'const', 'return', 'if', 'loop', 'for', 'while', 'switch',
    'break', 'continue', 'continuing', 'discard',
})
CLOSERS = {'(': ')', '[': ']', '{': '}'}


def _tok_leaf(tok: Token) -> AstNode:
    if tok.kind == 'ident':
        return AstNode.leaf(NodeKind.IDENTIFIER, tok.text)
    if tok.kind in ('int', 'float') or tok.text in ('true', 'false'):
        return AstNode.leaf(NodeKind.LITERAL, tok.text)
    return AstNode.leaf(NodeKind.TOKEN, tok.text)


class Parser:
    """Parses a token list into an AstTree.

    Args:
        tokens: Output of the lexer (terminated by an 'eof' token)
        tracer: Optional object with a ``hit(site)`` method for coverage
        max_nesting: Nesting depth past which constructs are swallowed
            whole and a 'limit' diagnostic is recorded
    """

    def __init__(self, tokens: List[Token], tracer=None, max_nesting: int = MAX_PARSE_NESTING):
        self.tokens = tokens
        self.pos = 0
        self.diagnostics: List[Diagnostic] = []
        self.depth = 0
        self.max_nesting = max_nesting
        self._hit = tracer.hit if tracer is not None else None

    # ==================================================================
    # token helpers
    # ==================================================================

    def _trace(self, site: str):
        if self._hit is not None:
            self._hit(site)

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def _peek(self, k: int = 1) -> Token:
        i = min(self.pos + k, len(self.tokens) - 1)
        return self.tokens[i]

    def _at_eof(self) -> bool:
        return self.tok.kind == 'eof'

    def _at_punct(self, text: str) -> bool:
        return self.tok.kind == 'punct' and self.tok.text == text

    def _at_keyword(self, text: str) -> bool:
        return self.tok.kind == 'keyword' and self.tok.text == text

    def _advance(self) -> AstNode:
        tok = self.tok
        if tok.kind != 'eof':
            self.pos += 1
        return _tok_leaf(tok)

    def _error(self, message: str, code: str = 'syntax'):
        self.diagnostics.append(Diagnostic(code, message, self.tok.offset))

    def _expect_punct(self, children: List[AstNode], text: str, context: str) -> bool:
        if self._at_punct(text):
            children.append(self._advance())
            return True
        self._trace(f'parser.recovery.missing.{context}')
        self._error(f"expected '{text}' in {context}, found '{self.tok.text or 'end of input'}'")
        return False

    def _expect_ident(self, children: List[AstNode], context: str) -> bool:
        if self.tok.kind == 'ident':
            children.append(self._advance())
            return True
        self._trace(f'parser.recovery.missing_ident.{context}')
        self._error(f"expected identifier in {context}, found '{self.tok.text or 'end of input'}'")
        return False

    def _split_greater(self):
        """Split a leading '>' off '>>', '>=' or '>>=' (template close)."""
        tok = self.tok
        if tok.kind == 'punct' and len(tok.text) > 1 and tok.text[0] == '>':
            self._trace('parser.template.split')
            rest = Token('punct', tok.text[1:], tok.offset + 1)
            self.tokens[self.pos] = Token('punct', '>', tok.offset)
            self.tokens.insert(self.pos + 1, rest)

    def _enter(self) -> bool:
        self.depth += 1
        return self.depth <= self.max_nesting

    def _leave(self):
        self.depth -= 1

    def _swallow_nested(self) -> Optional[AstNode]:
        """Consume one balanced unit flat into an ERROR node (nesting limit)."""
        self._trace('parser.recovery.limit')
        if not any(d.code == 'limit' for d in self.diagnostics):
            self._error(f"nesting deeper than {self.max_nesting}", code='limit')
        consumed = []
        balance = 0
        while not self._at_eof():
            tok = self.tok
            if tok.kind == 'punct':
                if balance == 0 and tok.text in (')', ']', '}', ';', ','):
                    break
                if tok.text in CLOSERS:
                    balance += 1
                elif tok.text in (')', ']', '}'):
                    balance -= 1
            consumed.append(self._advance())
        if not consumed:
            return None
        return AstNode(NodeKind.ERROR, '', consumed)

    def _recover(self, sync_keywords, stop_at_close: bool) -> Optional[AstNode]:
        """Skip at least one token until a synchronization point.

        A ';' is consumed into the error node; '}' (when stop_at_close) and
        keywords in sync_keywords are left for the caller.
        """
        consumed = []
        balance = 0
        while not self._at_eof():
            tok = self.tok
            if consumed and balance == 0:
                if tok.kind == 'keyword' and tok.text in sync_keywords:
                    break
                if tok.kind == 'punct' and tok.text == '@' and sync_keywords is GLOBAL_SYNC:
                    break
            if tok.kind == 'punct':
                if tok.text == '}' and balance == 0 and stop_at_close:
                    break
                if tok.text in CLOSERS:
                    balance += 1
                elif tok.text in (')', ']', '}'):
                    balance = max(0, balance - 1)
                elif tok.text == ';' and balance == 0:
                    consumed.append(self._advance())
                    break
            consumed.append(self._advance())
        if not consumed:
            return None
        self._trace('parser.recovery.skip')
        return AstNode(NodeKind.ERROR, '', consumed)

    # ==================================================================
    # top level
    # ==================================================================

    def parse_translation_unit(self) -> AstTree:
        decls = []
        while not self._at_eof():
            start = self.pos
            node = self._global_decl()
            if node is not None:
                decls.append(node)
            if self.pos == start:
                # progress guarantee
                self._trace('parser.recovery.global_stuck')
                decls.append(AstNode(NodeKind.ERROR, '', [self._advance()]))
        return AstTree(AstNode(NodeKind.TRANSLATION_UNIT, '', decls), self.diagnostics)

    def _global_decl(self) -> Optional[AstNode]:
        attrs = self._attributes()
        tok = self.tok
        if tok.kind == 'keyword':
            if tok.text == 'struct':
                self._trace('parser.global.struct')
                return self._struct_decl(attrs)
            if tok.text == 'fn':
                self._trace('parser.global.fn')
                return self._function_decl(attrs)
            if tok.text == 'var':
                self._trace('parser.global.var')
                return self._var_decl(NodeKind.GLOBAL_VAR_DECL, attrs)
            if tok.text in ('const', 'override'):
                self._trace(f'parser.global.{tok.text}')
                return self._const_decl(attrs)
        if self._at_punct(';') and not attrs:
            self._trace('parser.global.empty')
            return AstNode(NodeKind.EMPTY_STMT, '', [self._advance()])
        self._trace('parser.recovery.global')
        self._error(f"unexpected '{tok.text or 'end of input'}' at global scope")
        err = self._recover(GLOBAL_SYNC, stop_at_close=False)
        if attrs:
            children = attrs + ([err] if err is not None else [])
            return AstNode(NodeKind.ERROR, '', children)
        return err

    def _attributes(self) -> List[AstNode]:
        attrs = []
        while self._at_punct('@'):
            children = [self._advance()]
            if self.tok.kind in ('ident', 'keyword'):
                self._trace(f'parser.attribute.{self.tok.text}' if self.tok.text in (
                    'location', 'builtin', 'group', 'binding', 'workgroup_size',
                    'vertex', 'fragment', 'compute', 'interpolate', 'align', 'size', 'id',
                ) else 'parser.attribute.other')
                children.append(self._advance())
            else:
                self._trace('parser.recovery.attribute_name')
                self._error("expected attribute name after '@'")
            if self._at_punct('('):
                children.append(self._arg_list())
            attrs.append(AstNode(NodeKind.ATTRIBUTE, '', children))
        return attrs

    def _struct_decl(self, attrs: List[AstNode]) -> AstNode:
        children = attrs + [self._advance()]
        self._expect_ident(children, 'struct')
        if not self._expect_punct(children, '{', 'struct'):
            return AstNode(NodeKind.STRUCT_DECL, '', children)
        while not self._at_punct('}') and not self._at_eof():
            start = self.pos
            member = self._struct_member()
            if member is not None:
                children.append(member)
            if self.pos == start:
                self._trace('parser.recovery.struct_member')
                err = self._recover(GLOBAL_SYNC, stop_at_close=True)
                if err is None:
                    break
                children.append(err)
        self._expect_punct(children, '}', 'struct')
        return AstNode(NodeKind.STRUCT_DECL, '', children)

    def _struct_member(self) -> Optional[AstNode]:
        attrs = self._attributes()
        if self.tok.kind != 'ident':
            if attrs:
                self._error("expected member name")
                return AstNode(NodeKind.ERROR, '', attrs)
            self._error(f"unexpected '{self.tok.text or 'end of input'}' in struct body")
            return None
        self._trace('parser.struct.member')
        children = attrs + [self._advance()]
        if self._expect_punct(children, ':', 'struct member'):
            ty = self._type_expr()
            if ty is not None:
                children.append(ty)
        if self._at_punct(','):
            children.append(self._advance())
        elif not self._at_punct('}'):
            self._trace('parser.recovery.member_separator')
            self._error("expected ',' between struct members")
        return AstNode(NodeKind.STRUCT_MEMBER, '', children)

    def _function_decl(self, attrs: List[AstNode]) -> AstNode:
        children = attrs + [self._advance()]
        self._expect_ident(children, 'function')
        if self._at_punct('('):
            children.append(self._param_list())
        else:
            self._trace('parser.recovery.missing.params')
            self._error("expected '(' after function name")
        if self._at_punct('->'):
            self._trace('parser.fn.return_type')
            ret = [self._advance()] + self._attributes()
            ty = self._type_expr()
            if ty is not None:
                ret.append(ty)
            children.append(AstNode(NodeKind.RETURN_TYPE, '', ret))
        if self._at_punct('{'):
            children.append(self._compound())
        else:
            self._trace('parser.recovery.missing.body')
            self._error("expected function body")
        return AstNode(NodeKind.FUNCTION_DECL, '', children)

    def _param_list(self) -> AstNode:
        children = [self._advance()]
        while not self._at_punct(')') and not self._at_eof():
            attrs = self._attributes()
            if self.tok.kind != 'ident':
                self._trace('parser.recovery.param')
                self._error("expected parameter name")
                err = self._recover_until(frozenset({')', '{'}))
                if attrs or err is not None:
                    children.append(AstNode(NodeKind.ERROR, '', attrs + ([err] if err else [])))
                break
            self._trace('parser.fn.param')
            param = attrs + [self._advance()]
            if self._expect_punct(param, ':', 'parameter'):
                ty = self._type_expr()
                if ty is not None:
                    param.append(ty)
            if self._at_punct(','):
                param.append(self._advance())
                children.append(AstNode(NodeKind.PARAM, '', param))
            else:
                children.append(AstNode(NodeKind.PARAM, '', param))
                break
        self._expect_punct(children, ')', 'parameter list')
        return AstNode(NodeKind.PARAM_LIST, '', children)

    def _recover_until(self, stops) -> Optional[AstNode]:
        consumed = []
        while not self._at_eof() and not (self.tok.kind == 'punct' and self.tok.text in stops):
            consumed.append(self._advance())
        if not consumed:
            return None
        return AstNode(NodeKind.ERROR, '', consumed)

    def _template_list(self) -> AstNode:
        """`<a, b>` after `var` (address space and access mode)."""
        children = [self._advance()]
        while True:
            if self.tok.kind == 'ident':
                children.append(self._advance())
            else:
                self._trace('parser.recovery.template_list')
                self._error("expected identifier in template list")
            if self._at_punct(','):
                children.append(self._advance())
                continue
            break
        self._split_greater()
        self._expect_punct(children, '>', 'template list')
        return AstNode(NodeKind.TEMPLATE_LIST, '', children)

    def _var_decl(self, kind: NodeKind, attrs: List[AstNode]) -> AstNode:
        children = attrs + [self._advance()]
        if self._at_punct('<'):
            self._trace('parser.var.template')
            children.append(self._template_list())
        self._decl_tail(children, 'variable declaration', require_init=False)
        return AstNode(kind, '', children)

    def _const_decl(self, attrs: List[AstNode]) -> AstNode:
        children = attrs + [self._advance()]
        self._decl_tail(children, 'constant declaration', require_init=False)
        return AstNode(NodeKind.CONST_DECL, '', children)

    def _decl_tail(self, children: List[AstNode], context: str, require_init: bool,
                   semicolon: bool = True):
        self._expect_ident(children, context)
        if self._at_punct(':'):
            children.append(self._advance())
            ty = self._type_expr()
            if ty is not None:
                children.append(ty)
        if self._at_punct('='):
            children.append(self._advance())
            expr = self._expression()
            if expr is not None:
                children.append(expr)
            else:
                self._error(f"expected initializer in {context}")
        elif require_init:
            self._trace('parser.recovery.missing_init')
            self._error(f"expected '=' in {context}")
        if semicolon:
            self._expect_punct(children, ';', context)

    # ==================================================================
    # types
    # ==================================================================

    def _type_expr(self) -> Optional[AstNode]:
        if self.tok.kind != 'ident':
            self._trace('parser.recovery.type')
            self._error(f"expected type, found '{self.tok.text or 'end of input'}'")
            return None
        if not self._enter():
            node = self._swallow_nested()
            self._leave()
            return node
        try:
            name = self.tok.text
            children = [self._advance()]
            if self._at_punct('<') and name in TYPE_GENERATORS:
                self._trace('parser.type.template')
                children.append(self._advance())
                while True:
                    arg = self._template_arg()
                    if arg is not None:
                        children.append(arg)
                    if self._at_punct(','):
                        children.append(self._advance())
                        if self._at_punct('>') or self.tok.text.startswith('>'):
                            break
                        continue
                    break
                self._split_greater()
                self._expect_punct(children, '>', 'type template')
            else:
                self._trace('parser.type.name')
            return AstNode(NodeKind.TYPE_EXPR, '', children)
        finally:
            self._leave()

    def _template_arg(self) -> Optional[AstNode]:
        tok = self.tok
        if tok.kind == 'ident':
            nxt = self._peek()
            # a bare name followed by an operator is an expression (array<f32, N + 1>)
            if nxt.kind == 'punct' and nxt.text in BINARY_PRECEDENCE and not nxt.text.startswith('>') \
                    and not (nxt.text == '<' and tok.text in TYPE_GENERATORS):
                return self._expression(no_greater=True)
            return self._type_expr()
        if tok.kind in ('int', 'float') or tok.text in ('(', '-'):
            return self._expression(no_greater=True)
        self._trace('parser.recovery.template_arg')
        self._error(f"unexpected '{tok.text or 'end of input'}' in template argument list")
        return None

    # ==================================================================
    # statements
    # ==================================================================

    def _compound(self) -> AstNode:
        if not self._enter():
            self._leave()
            return self._swallow_block()
        try:
            children = [self._advance()]
            while not self._at_punct('}') and not self._at_eof():
                start = self.pos
                stmt = self._statement()
                if stmt is not None:
                    children.append(stmt)
                if self.pos == start:
                    self._trace('parser.recovery.block_stuck')
                    err = self._recover(STATEMENT_SYNC, stop_at_close=True)
                    if err is None:
                        break
                    children.append(err)
            self._expect_punct(children, '}', 'block')
            return AstNode(NodeKind.COMPOUND_STMT, '', children)
        finally:
            self._leave()

    def _swallow_block(self) -> AstNode:
        """Consume a whole `{ ... }` flat (nesting limit)."""
        self._trace('parser.recovery.limit')
        if not any(d.code == 'limit' for d in self.diagnostics):
            self._error(f"nesting deeper than {self.max_nesting}", code='limit')
        consumed = [self._advance()]
        balance = 1
        while not self._at_eof() and balance > 0:
            if self._at_punct('{'):
                balance += 1
            elif self._at_punct('}'):
                balance -= 1
            consumed.append(self._advance())
        return AstNode(NodeKind.ERROR, '', consumed)

    def _statement(self) -> Optional[AstNode]:
        tok = self.tok
        if tok.kind == 'punct':
            if tok.text == '{':
                self._trace('parser.stmt.block')
                return self._compound()
            if tok.text == ';':
                self._trace('parser.stmt.empty')
                return AstNode(NodeKind.EMPTY_STMT, '', [self._advance()])
        if tok.kind == 'keyword':
            handler = self._KEYWORD_STATEMENTS.get(tok.text)
            if handler is not None:
                self._trace(f'parser.stmt.{tok.text}')
                return handler(self)
        if tok.kind == 'punct' and tok.text == '@':
            # attributes on statements are not part of the subset
            self._trace('parser.recovery.stmt_attribute')
            self._error("attributes are not allowed on statements")
            return self._recover(STATEMENT_SYNC, stop_at_close=True)
        return self._simple_statement(semicolon=True)

    def _var_stmt(self) -> AstNode:
        children = [self._advance()]
        if self._at_punct('<'):
            self._trace('parser.var.template')
            children.append(self._template_list())
        self._decl_tail(children, 'variable declaration', require_init=False)
        return AstNode(NodeKind.VAR_STMT, '', children)

    def _let_stmt(self) -> AstNode:
        children = [self._advance()]
        self._decl_tail(children, 'let declaration', require_init=True)
        return AstNode(NodeKind.LET_STMT, '', children)

    def _const_stmt(self) -> AstNode:
        return self._const_decl([])

    def _return_stmt(self) -> AstNode:
        children = [self._advance()]
        if not self._at_punct(';'):
            expr = self._expression()
            if expr is not None:
                self._trace('parser.stmt.return_value')
                children.append(expr)
        self._expect_punct(children, ';', 'return')
        return AstNode(NodeKind.RETURN_STMT, '', children)

    def _if_stmt(self) -> AstNode:
        children = [self._advance()]
        cond = self._expression()
        if cond is not None:
            children.append(cond)
        else:
            self._error("expected condition after 'if'")
        if self._at_punct('{'):
            children.append(self._compound())
        else:
            self._trace('parser.recovery.missing.if_body')
            self._error("expected '{' after if condition")
            return AstNode(NodeKind.IF_STMT, '', children)
        if self._at_keyword('else'):
            else_children = [self._advance()]
            if self._at_keyword('if'):
                self._trace('parser.stmt.else_if')
                if not self._enter():
                    err = self._swallow_nested()
                    if err is not None:
                        else_children.append(err)
                else:
                    else_children.append(self._if_stmt())
                self._leave()
            elif self._at_punct('{'):
                self._trace('parser.stmt.else')
                else_children.append(self._compound())
            else:
                self._trace('parser.recovery.missing.else_body')
                self._error("expected 'if' or '{' after 'else'")
            children.append(AstNode(NodeKind.ELSE_CLAUSE, '', else_children))
        return AstNode(NodeKind.IF_STMT, '', children)

    def _loop_stmt(self) -> AstNode:
        children = [self._advance()]
        if self._at_punct('{'):
            children.append(self._compound())
        else:
            self._trace('parser.recovery.missing.loop_body')
            self._error("expected '{' after 'loop'")
        return AstNode(NodeKind.LOOP_STMT, '', children)

    def _continuing_stmt(self) -> AstNode:
        children = [self._advance()]
        if self._at_punct('{'):
            children.append(self._compound())
        else:
            self._trace('parser.recovery.missing.continuing_body')
            self._error("expected '{' after 'continuing'")
        return AstNode(NodeKind.CONTINUING_STMT, '', children)

    def _for_stmt(self) -> AstNode:
        children = [self._advance()]
        if self._at_punct('('):
            header = [self._advance()]
            if not self._at_punct(';'):
                init = self._for_init()
                if init is not None:
                    header.append(init)
            self._expect_punct(header, ';', 'for header')
            if not self._at_punct(';'):
                cond = self._expression()
                if cond is not None:
                    self._trace('parser.stmt.for_condition')
                    header.append(cond)
            self._expect_punct(header, ';', 'for header')
            if not self._at_punct(')'):
                update = self._simple_statement(semicolon=False)
                if update is not None:
                    self._trace('parser.stmt.for_update')
                    header.append(update)
            self._expect_punct(header, ')', 'for header')
            children.append(AstNode(NodeKind.FOR_HEADER, '', header))
        else:
            self._trace('parser.recovery.missing.for_header')
            self._error("expected '(' after 'for'")
        if self._at_punct('{'):
            children.append(self._compound())
        else:
            self._trace('parser.recovery.missing.for_body')
            self._error("expected '{' for loop body")
        return AstNode(NodeKind.FOR_STMT, '', children)

    def _for_init(self) -> Optional[AstNode]:
        if self._at_keyword('var'):
            self._trace('parser.stmt.for_init_var')
            children = [self._advance()]
            self._decl_tail(children, 'for initializer', require_init=False, semicolon=False)
            return AstNode(NodeKind.VAR_STMT, '', children)
        if self._at_keyword('let'):
            self._trace('parser.stmt.for_init_let')
            children = [self._advance()]
            self._decl_tail(children, 'for initializer', require_init=True, semicolon=False)
            return AstNode(NodeKind.LET_STMT, '', children)
        return self._simple_statement(semicolon=False)

    def _while_stmt(self) -> AstNode:
        children = [self._advance()]
        cond = self._expression()
        if cond is not None:
            children.append(cond)
        else:
            self._error("expected condition after 'while'")
        if self._at_punct('{'):
            children.append(self._compound())
        else:
            self._trace('parser.recovery.missing.while_body')
            self._error("expected '{' for while body")
        return AstNode(NodeKind.WHILE_STMT, '', children)

    def _switch_stmt(self) -> AstNode:
        children = [self._advance()]
        sel = self._expression()
        if sel is not None:
            children.append(sel)
        else:
            self._error("expected selector after 'switch'")
        if not self._expect_punct(children, '{', 'switch'):
            return AstNode(NodeKind.SWITCH_STMT, '', children)
        while not self._at_punct('}') and not self._at_eof():
            if self._at_keyword('case') or self._at_keyword('default'):
                children.append(self._case_clause())
            else:
                self._trace('parser.recovery.switch_body')
                self._error(f"expected 'case' or 'default', found '{self.tok.text}'")
                err = self._recover(frozenset({'case', 'default'}), stop_at_close=True)
                if err is None:
                    break
                children.append(err)
        self._expect_punct(children, '}', 'switch')
        return AstNode(NodeKind.SWITCH_STMT, '', children)

    def _case_clause(self) -> AstNode:
        if self._at_keyword('default'):
            self._trace('parser.stmt.default')
            children = [self._advance()]
        else:
            self._trace('parser.stmt.case')
            children = [self._advance()]
            while True:
                if self._at_keyword('default'):
                    children.append(self._advance())
                else:
                    sel = self._expression()
                    if sel is None:
                        self._error("expected case selector")
                        break
                    children.append(sel)
                if self._at_punct(','):
                    children.append(self._advance())
                    if self._at_punct(':') or self._at_punct('{'):
                        break
                    continue
                break
        if self._at_punct(':'):
            children.append(self._advance())
        if self._at_punct('{'):
            children.append(self._compound())
        else:
            self._trace('parser.recovery.missing.case_body')
            self._error("expected '{' for case body")
        return AstNode(NodeKind.CASE_CLAUSE, '', children)

    def _break_stmt(self) -> AstNode:
        children = [self._advance()]
        if self._at_keyword('if'):
            self._trace('parser.stmt.break_if')
            children.append(self._advance())
            cond = self._expression()
            if cond is not None:
                children.append(cond)
            else:
                self._error("expected condition after 'break if'")
            self._expect_punct(children, ';', 'break if')
            return AstNode(NodeKind.BREAK_IF_STMT, '', children)
        self._expect_punct(children, ';', 'break')
        return AstNode(NodeKind.BREAK_STMT, '', children)

    def _continue_stmt(self) -> AstNode:
        children = [self._advance()]
        self._expect_punct(children, ';', 'continue')
        return AstNode(NodeKind.CONTINUE_STMT, '', children)

    def _discard_stmt(self) -> AstNode:
        children = [self._advance()]
        self._expect_punct(children, ';', 'discard')
        return AstNode(NodeKind.DISCARD_STMT, '', children)

    _KEYWORD_STATEMENTS = {
        'var': _var_stmt,
        'let': _let_stmt,
        'const': _const_stmt,
        'return': _return_stmt,
        'if': _if_stmt,
        'loop': _loop_stmt,
        'continuing': _continuing_stmt,
        'for': _for_stmt,
        'while': _while_stmt,
        'switch': _switch_stmt,
        'break': _break_stmt,
        'continue': _continue_stmt,
        'discard': _discard_stmt,
    }

    def _simple_statement(self, semicolon: bool) -> Optional[AstNode]:
        """Assignment, increment/decrement or call statement."""
        start_tok = self.tok
        if start_tok.kind not in ('ident', 'int', 'float') and not (
                start_tok.kind == 'punct' and start_tok.text in ('(', '*', '&')) and not (
                start_tok.kind == 'keyword' and start_tok.text in ('true', 'false')):
            self._trace('parser.recovery.stmt')
            self._error(f"unexpected '{start_tok.text or 'end of input'}' at start of statement")
            if not semicolon:
                return None
            return self._recover(STATEMENT_SYNC, stop_at_close=True)

        lhs = self._unary()
        if lhs is None:
            return None
        tok = self.tok
        if tok.kind == 'punct' and tok.text in ASSIGN_OPERATORS:
            self._trace('parser.stmt.assign' if tok.text == '=' else 'parser.stmt.compound_assign')
            children = [lhs, self._advance()]
            rhs = self._expression()
            if rhs is not None:
                children.append(rhs)
            else:
                self._error("expected expression after assignment operator")
            kind = NodeKind.ASSIGN_STMT
        elif tok.kind == 'punct' and tok.text in ('++', '--'):
            self._trace('parser.stmt.increment')
            children = [lhs, self._advance()]
            kind = NodeKind.INCREMENT_STMT
        elif lhs.kind == NodeKind.CALL_EXPR:
            self._trace('parser.stmt.call')
            children = [lhs]
            kind = NodeKind.CALL_STMT
        else:
            self._trace('parser.recovery.expr_stmt')
            self._error("expression is not a statement")
            children = [lhs]
            if semicolon:
                err = self._recover(STATEMENT_SYNC, stop_at_close=True)
                if err is not None:
                    children.append(err)
            return AstNode(NodeKind.ERROR, '', children)
        if semicolon:
            self._expect_punct(children, ';', 'statement')
        return AstNode(kind, '', children)

    # ==================================================================
    # expressions
    # ==================================================================

    def _expression(self, no_greater: bool = False) -> Optional[AstNode]:
        if not self._enter():
            node = self._swallow_nested()
            self._leave()
            return node
        try:
            return self._binary(0, no_greater)
        finally:
            self._leave()

    def _binary(self, min_prec: int, no_greater: bool) -> Optional[AstNode]:
        lhs = self._unary()
        if lhs is None:
            return None
        while True:
            tok = self.tok
            if tok.kind != 'punct':
                return lhs
            prec = BINARY_PRECEDENCE.get(tok.text)
            if prec is None or prec <= min_prec:
                return lhs
            if no_greater and tok.text.startswith('>'):
                return lhs
            self._trace(f'parser.expr.binary.{prec}')
            op = self._advance()
            rhs = self._binary(prec, no_greater)
            if rhs is None:
                self._trace('parser.recovery.missing_operand')
                self._error(f"expected operand after '{op.text}'")
                return AstNode(NodeKind.BINARY_EXPR, '', [lhs, op])
            lhs = AstNode(NodeKind.BINARY_EXPR, '', [lhs, op, rhs])

    def _unary(self) -> Optional[AstNode]:
        tok = self.tok
        if tok.kind == 'punct' and tok.text in UNARY_OPERATORS:
            if not self._enter():
                node = self._swallow_nested()
                self._leave()
                return node
            try:
                self._trace(f'parser.expr.unary')
                op = self._advance()
                operand = self._unary()
                if operand is None:
                    self._error(f"expected operand after unary '{op.text}'")
                    return AstNode(NodeKind.UNARY_EXPR, '', [op])
                return AstNode(NodeKind.UNARY_EXPR, '', [op, operand])
            finally:
                self._leave()
        if tok.kind == 'punct' and tok.text == '--':
            # '--x' lexes as one token; WGSL has no prefix decrement
            self._trace('parser.recovery.prefix_decrement')
        return self._postfix(self._primary())

    def _primary(self) -> Optional[AstNode]:
        tok = self.tok
        if tok.kind in ('int', 'float'):
            self._trace('parser.expr.literal_number')
            return self._advance()
        if tok.kind == 'keyword' and tok.text in ('true', 'false'):
            self._trace('parser.expr.literal_bool')
            return self._advance()
        if tok.kind == 'ident':
            if tok.text in TYPE_GENERATORS and self._peek().is_punct('<'):
                callee = self._type_expr()
                if self._at_punct('('):
                    self._trace('parser.expr.typed_construct')
                    return AstNode(NodeKind.CALL_EXPR, '', [callee, self._arg_list()])
                self._trace('parser.recovery.type_in_expression')
                self._error("type used as a value")
                return callee
            ident = self._advance()
            if self._at_punct('('):
                self._trace('parser.expr.call')
                return AstNode(NodeKind.CALL_EXPR, '', [ident, self._arg_list()])
            self._trace('parser.expr.ident')
            return ident
        if tok.kind == 'punct' and tok.text == '(':
            self._trace('parser.expr.paren')
            children = [self._advance()]
            inner = self._expression()
            if inner is not None:
                children.append(inner)
            else:
                self._error("expected expression inside parentheses")
            self._expect_punct(children, ')', 'parenthesized expression')
            return AstNode(NodeKind.PAREN_EXPR, '', children)
        self._trace('parser.recovery.primary')
        self._error(f"expected expression, found '{tok.text or 'end of input'}'")
        return None

    def _postfix(self, node: Optional[AstNode]) -> Optional[AstNode]:
        if node is None:
            return None
        steps = 0
        while True:
            if self._at_punct('.'):
                self._trace('parser.expr.member')
                children = [node, self._advance()]
                self._expect_ident(children, 'member access')
                node = AstNode(NodeKind.MEMBER_EXPR, '', children)
            elif self._at_punct('['):
                if not self._enter():
                    self._leave()
                    err = self._swallow_nested()
                    return AstNode(NodeKind.ERROR, '', [node] + ([err] if err else []))
                try:
                    self._trace('parser.expr.index')
                    children = [node, self._advance()]
                    idx = self._expression()
                    if idx is not None:
                        children.append(idx)
                    else:
                        self._error("expected index expression")
                    self._expect_punct(children, ']', 'index')
                    node = AstNode(NodeKind.INDEX_EXPR, '', children)
                finally:
                    self._leave()
            else:
                return node
            steps += 1
            if steps > self.max_nesting:
                self._trace('parser.recovery.limit')
                if not any(d.code == 'limit' for d in self.diagnostics):
                    self._error(f"postfix chain longer than {self.max_nesting}", code='limit')

    def _arg_list(self) -> AstNode:
        if not self._enter():
            self._leave()
            children = [self._advance()]
            err = self._swallow_nested()
            if err is not None:
                children.append(err)
            self._expect_punct(children, ')', 'argument list')
            return AstNode(NodeKind.ARG_LIST, '', children)
        try:
            children = [self._advance()]
            while not self._at_punct(')') and not self._at_eof():
                arg = self._expression()
                if arg is None:
                    err = self._recover_until(frozenset({')', ';', '{', '}'}))
                    if err is not None:
                        children.append(err)
                    break
                children.append(arg)
                if self._at_punct(','):
                    children.append(self._advance())
                    continue
                break
            self._expect_punct(children, ')', 'argument list')
            return AstNode(NodeKind.ARG_LIST, '', children)
        finally:
            self._leave()


def decode_source(source: Union[str, bytes]) -> str:
    if isinstance(source, bytes):
        return source.decode('utf-8', errors='replace')
    return source


def parse(source: Union[str, bytes], tracer=None, max_bytes: int = MAX_SOURCE_BYTES,
          max_nesting: int = MAX_PARSE_NESTING) -> AstTree:
    """Parse WGSL text into a tree that covers the whole input.

    Args:
        source: WGSL text; bytes are decoded as UTF-8 with replacement
        tracer: Optional coverage tracer (``hit(site)``)
        max_bytes: Size limit of the encoded input
        max_nesting: Nesting depth limit

    Returns:
        AstTree rooted at a translation unit. Unparseable regions appear as
        ERROR nodes; missing tokens and limit hits as diagnostics.

    Raises:
        ParseFailure: If the input is empty or larger than max_bytes
    """
    raw_len = len(source) if isinstance(source, bytes) else len(source.encode('utf-8', errors='replace'))
    if raw_len == 0:
        raise ParseFailure("empty input")
    if raw_len > max_bytes:
        raise ParseFailure(f"input of {raw_len} bytes exceeds limit of {max_bytes}")
    text = decode_source(source)

    old_limit = sys.getrecursionlimit()
    if old_limit < PARSER_RECURSION_LIMIT:
        sys.setrecursionlimit(PARSER_RECURSION_LIMIT)
    try:
        tokens = tokenize(text, tracer)
        return Parser(tokens, tracer, max_nesting).parse_translation_unit()
    finally:
        if old_limit < PARSER_RECURSION_LIMIT:
            sys.setrecursionlimit(old_limit)
