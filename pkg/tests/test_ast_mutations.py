import random
from collections import Counter

import pytest

from syntax.dictionary import TokenDictionary, default_dictionary, load_dictionary
from syntax.minimize import minimize_ast
from syntax.mutations import (
    AST_OPERATOR_NAMES, AstMutationContext, Delete, Identifier, RecursiveReplace, Replace, Swap,
    mutate_ast,
)
from syntax.nodes import (
    AstNode, AstTree, NodeKind, iter_nodes, iter_with_paths, node_at, node_count, tree_depth,
    well_formed,
)
from syntax.parser import parse
from syntax.unparse import unparse

OVERSIZED = '340282366920938463463374607431768211456'


def _multiset(tree):
    return Counter((n.kind, n.text) for n in iter_nodes(tree.root))


def _shape(tree):
    return [n.kind if not n.is_leaf else 'leaf' for n in iter_nodes(tree.root)]


def test_operator_names():
    assert AST_OPERATOR_NAMES == ('RecursiveReplace', 'Delete', 'Replace', 'Splice', 'Swap', 'Identifier')


def test_swap_without_site_is_a_noop(rng):
    tree = AstTree(AstNode(NodeKind.TRANSLATION_UNIT, '', [
        AstNode(NodeKind.EMPTY_STMT, '', [AstNode.leaf(NodeKind.TOKEN, ';')]),
    ]))
    result = mutate_ast(tree, [], rng, operator='Swap', strict=True)
    assert not result.applied
    assert result.tree is tree


def test_recursive_replace_deepens_if(rng):
    tree = parse('fn f() { if (true) {} }')
    path = next(p for p, n in iter_with_paths(tree.root) if n.kind == NodeKind.IF_STMT)
    ctx = AstMutationContext(recursive_budget=3)
    out = RecursiveReplace().apply_at(tree, (path, 'stmt'), rng, ctx)
    assert out is not None
    assert tree_depth(out.root) >= tree_depth(tree.root) + 1
    assert parse(unparse(out)).error_count() == 0
    # input untouched
    assert unparse(tree) == unparse(parse('fn f() { if (true) {} }'))


def test_replace_with_oversized_literal(rng):
    tree = parse('fn f() { let x = 1; }')
    path = next(p for p, n in iter_with_paths(tree.root) if n.kind == NodeKind.LITERAL)
    out = Replace().apply_at(tree, path, rng, AstMutationContext(), entry=OVERSIZED)
    assert OVERSIZED in unparse(out)
    assert node_at(out.root, path).kind == NodeKind.LITERAL


def test_delete_removes_exactly_one_subtree(vertex_source):
    tree = parse(vertex_source)
    mutator = Delete()
    ctx = AstMutationContext()
    for site in mutator.sites(tree, ctx)[:40]:
        removed = node_count(node_at(tree.root, site))
        out = mutator.apply_at(tree, site, random.Random(0), ctx)
        assert out is not None
        assert node_count(out.root) == node_count(tree.root) - removed


def test_swap_preserves_node_multiset(vertex_source):
    tree = parse(vertex_source)
    rng = random.Random(7)
    for _ in range(30):
        out = Swap().apply(tree, rng, AstMutationContext())
        assert out is not None
        assert _multiset(out) == _multiset(tree)


def test_identifier_changes_one_leaf(vertex_source):
    tree = parse(vertex_source)
    rng = random.Random(3)
    for _ in range(30):
        out = Identifier().apply(tree, rng, AstMutationContext())
        assert out is not None
        assert _shape(out) == _shape(tree)
        before = [n.text for n in iter_nodes(tree.root)]
        after = [n.text for n in iter_nodes(out.root)]
        changed = [i for i, (a, b) in enumerate(zip(before, after)) if a != b]
        assert len(changed) == 1


def test_splice_without_donors_falls_back(vertex_source, rng):
    tree = parse(vertex_source)
    result = mutate_ast(tree, [], rng, operator='Splice')
    assert result.applied
    assert result.operator != 'Splice'


def test_splice_uses_donor_subtree(rng):
    tree = parse('fn f() { let a = 1; }')
    donor = parse('fn g() { let b = 2; return; }')
    result = mutate_ast(tree, [donor], rng, operator='Splice', strict=True)
    assert result.applied
    assert result.operator == 'Splice'
    texts = {n.text for n in iter_nodes(result.tree.root)}
    assert texts & {'g', 'b', '2', 'return'}


def test_random_mutations_respect_caps(vertex_source):
    rng = random.Random(99)
    corpus = [parse(vertex_source)]
    ctx = AstMutationContext(donors=corpus, max_nodes=400, max_depth=40)
    tree = corpus[0]
    for _ in range(200):
        result = mutate_ast(tree, corpus, rng, ctx=ctx)
        assert node_count(result.tree.root) <= 400
        assert tree_depth(result.tree.root) <= 40
        assert well_formed(result.tree.root)
        text = unparse(result.tree)
        if text:
            parse(text)
            tree = result.tree
        else:
            tree = corpus[0]


def test_mutation_never_modifies_input(vertex_source):
    tree = parse(vertex_source)
    before = unparse(tree)
    rng = random.Random(5)
    for name in AST_OPERATOR_NAMES:
        mutate_ast(tree, [parse('fn h() { return; }')], rng, operator=name)
    assert unparse(tree) == before


def test_unknown_operator():
    with pytest.raises(ValueError):
        mutate_ast(parse('fn f() {}'), [], random.Random(0), operator='Nope')


def test_dictionary_contents():
    dictionary = default_dictionary()
    assert OVERSIZED in dictionary.entries
    assert 'nan' in dictionary.entries
    assert OVERSIZED in dictionary.oversized_literals()
    assert '0' not in dictionary.oversized_literals()
    with pytest.raises(ValueError):
        TokenDictionary([])
    with pytest.raises(ValueError, match="64 bits"):
        TokenDictionary(['fn', '18446744073709551615'])
    assert TokenDictionary(['fn', OVERSIZED]).oversized_literals() == [OVERSIZED]


def test_load_dictionary(tmp_path):
    path = tmp_path / 'extra.dict'
    path.write_text('# comment\nkw_x="workgroupBarrier"\n"textureSample"\n', encoding='utf-8')
    dictionary = load_dictionary(str(path))
    assert 'workgroupBarrier' in dictionary.entries
    assert 'textureSample' in dictionary.entries
    assert len(dictionary) > len(default_dictionary())


# ============================================================================
# Minimizer
# ============================================================================

def _has_main(tree):
    for node in iter_nodes(tree.root):
        if node.kind == NodeKind.FUNCTION_DECL and any(
                c.kind == NodeKind.IDENTIFIER and c.text == 'main' for c in node.children):
            return True
    return False


def _single_removals(tree):
    for path, _ in iter_with_paths(tree.root):
        if not path:
            continue
        candidate = tree.clone()
        parent = node_at(candidate.root, path[:-1])
        if len(parent.children) < 2 and parent is not candidate.root:
            continue
        parent.children.pop(path[-1])
        yield candidate


def test_minimize_keeps_main():
    tree = parse('fn helper() -> i32 { return 1; }\nfn main() { let x = helper(); }')
    out = minimize_ast(tree, _has_main)
    assert _has_main(out)
    assert len(out.root.children) == 1
    names = {n.text for n in iter_nodes(out.root) if n.kind == NodeKind.IDENTIFIER}
    assert 'helper' not in names
    assert node_count(out.root) < node_count(tree.root)
    for candidate in _single_removals(out):
        assert not _has_main(candidate)


def test_minimize_always_true_empties_unit(vertex_source):
    out = minimize_ast(parse(vertex_source), lambda t: True)
    assert out.root.kind == NodeKind.TRANSLATION_UNIT
    assert out.root.children == []


def test_minimize_error_free(vertex_source):
    tree = parse(vertex_source)

    def keep(t):
        text = unparse(t)
        return bool(text) and parse(text).error_count() == 0

    out = minimize_ast(tree, keep)
    assert keep(out)
    assert node_count(out.root) < node_count(tree.root)


def test_minimize_respects_check_budget(vertex_source):
    calls = []

    def keep(t):
        calls.append(1)
        return True

    minimize_ast(parse(vertex_source), keep, max_checks=5)
    assert len(calls) <= 5
