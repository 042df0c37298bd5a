#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

#include "topk/element.hpp"

namespace topk {

/// Size-augmented treap over Elements. Priorities come from a seeded
/// generator, so equal seeds and operation sequences give equal shapes.
/// Supports rank queries and positional access in O(log n).
class RankTree {
  public:
    explicit RankTree(std::uint64_t seed = 0) : prioRng_(seed) {}

    std::size_t size() const { return count(root_); }
    bool empty() const { return !root_; }

    void insert(Element e) {
        auto node = std::make_unique<Node>();
        node->e = e;
        node->prio = prioRng_();
        node->size = 1;
        NodePtr lo, hi;
        splitLess(std::move(root_), e, lo, hi);
        root_ = merge(merge(std::move(lo), std::move(node)), std::move(hi));
        touch();
    }

    void insertBulk(const std::vector<Element>& es) {
        for (const Element& e : es) insert(e);
    }

    /// Removes e if present; returns whether it was.
    bool erase(const Element& e) {
        NodePtr lo, hi;
        splitLess(std::move(root_), e, lo, hi);
        NodePtr eq, rest;
        Element next = e;
        next.idx = e.idx + 1;  // (key, pe, idx) order makes this the successor bound
        splitLess(std::move(hi), next, eq, rest);
        const bool found = eq != nullptr;
        root_ = merge(std::move(lo), std::move(rest));
        touch();
        return found;
    }

    /// Removes and returns the subtree of elements strictly below x.
    RankTree splitBelow(const Element& x) {
        RankTree below(prioRng_());
        NodePtr lo, hi;
        splitLess(std::move(root_), x, lo, hi);
        below.root_ = std::move(lo);
        root_ = std::move(hi);
        touch();
        below.touch();
        return below;
    }

    /// Joins two trees whose key ranges do not interleave.
    static RankTree concat(RankTree a, RankTree b) {
        if (!a.empty() && !b.empty()) {
            if (b.min() < a.max())
                throw std::invalid_argument("RankTree::concat: overlapping key ranges");
        }
        RankTree out(a.prioRng_());
        out.root_ = merge(std::move(a.root_), std::move(b.root_));
        out.touch();
        return out;
    }

    Element at(std::size_t i) const {
        if (i >= size()) throw std::out_of_range("RankTree::at");
        const Node* n = root_.get();
        while (true) {
            const std::size_t ls = count(n->left);
            if (i < ls) {
                n = n->left.get();
            } else if (i == ls) {
                return n->e;
            } else {
                i -= ls + 1;
                n = n->right.get();
            }
        }
    }

    /// #elements strictly below v.
    std::size_t rankLess(const Element& v) const {
        std::size_t r = 0;
        const Node* n = root_.get();
        while (n) {
            if (n->e < v) {
                r += count(n->left) + 1;
                n = n->right.get();
            } else {
                n = n->left.get();
            }
        }
        return r;
    }

    /// #elements that are <= v.
    std::size_t rankLeq(const Element& v) const {
        std::size_t r = 0;
        const Node* n = root_.get();
        while (n) {
            if (n->e <= v) {
                r += count(n->left) + 1;
                n = n->right.get();
            } else {
                n = n->left.get();
            }
        }
        return r;
    }

    /// Cached extremes: O(log n) on the first access after a mutation, O(1)
    /// afterwards.
    Element min() const {
        if (!root_) throw std::out_of_range("RankTree::min on empty tree");
        if (!minValid_) {
            const Node* n = root_.get();
            while (n->left) n = n->left.get();
            minCache_ = n->e;
            minValid_ = true;
        }
        return minCache_;
    }
    Element max() const {
        if (!root_) throw std::out_of_range("RankTree::max on empty tree");
        if (!maxValid_) {
            const Node* n = root_.get();
            while (n->right) n = n->right.get();
            maxCache_ = n->e;
            maxValid_ = true;
        }
        return maxCache_;
    }

    /// Removes the first n elements and returns them in ascending order.
    std::vector<Element> extractPrefix(std::size_t n) {
        if (n > size()) throw std::out_of_range("RankTree::extractPrefix");
        NodePtr lo, hi;
        splitBySize(std::move(root_), n, lo, hi);
        root_ = std::move(hi);
        touch();
        std::vector<Element> out;
        out.reserve(n);
        collect(lo.get(), out);
        return out;
    }

    std::vector<Element> toSortedVector() const {
        std::vector<Element> out;
        out.reserve(size());
        collect(root_.get(), out);
        return out;
    }

    void clear() {
        root_.reset();
        touch();
    }

  private:
    struct Node;
    using NodePtr = std::unique_ptr<Node>;
    struct Node {
        Element e;
        std::uint64_t prio = 0;
        std::size_t size = 1;
        NodePtr left, right;
    };

    static std::size_t count(const NodePtr& n) { return n ? n->size : 0; }
    static void update(Node* n) { n->size = 1 + count(n->left) + count(n->right); }

    // lo receives elements < v, hi the rest
    static void splitLess(NodePtr n, const Element& v, NodePtr& lo, NodePtr& hi) {
        if (!n) {
            lo.reset();
            hi.reset();
            return;
        }
        if (n->e < v) {
            NodePtr rl, rh;
            splitLess(std::move(n->right), v, rl, rh);
            n->right = std::move(rl);
            update(n.get());
            lo = std::move(n);
            hi = std::move(rh);
        } else {
            NodePtr ll, lh;
            splitLess(std::move(n->left), v, ll, lh);
            n->left = std::move(lh);
            update(n.get());
            hi = std::move(n);
            lo = std::move(ll);
        }
    }

    static void splitBySize(NodePtr n, std::size_t k, NodePtr& lo, NodePtr& hi) {
        if (!n) {
            lo.reset();
            hi.reset();
            return;
        }
        const std::size_t ls = count(n->left);
        if (k <= ls) {
            NodePtr ll, lh;
            splitBySize(std::move(n->left), k, ll, lh);
            n->left = std::move(lh);
            update(n.get());
            hi = std::move(n);
            lo = std::move(ll);
        } else {
            NodePtr rl, rh;
            splitBySize(std::move(n->right), k - ls - 1, rl, rh);
            n->right = std::move(rl);
            update(n.get());
            lo = std::move(n);
            hi = std::move(rh);
        }
    }

    static NodePtr merge(NodePtr a, NodePtr b) {
        if (!a) return b;
        if (!b) return a;
        if (a->prio >= b->prio) {
            a->right = merge(std::move(a->right), std::move(b));
            update(a.get());
            return a;
        }
        b->left = merge(std::move(a), std::move(b->left));
        update(b.get());
        return b;
    }

    static void collect(const Node* n, std::vector<Element>& out) {
        if (!n) return;
        collect(n->left.get(), out);
        out.push_back(n->e);
        collect(n->right.get(), out);
    }

    void touch() {
        minValid_ = false;
        maxValid_ = false;
    }

    NodePtr root_;
    std::mt19937_64 prioRng_;
    mutable bool minValid_ = false, maxValid_ = false;
    mutable Element minCache_, maxCache_;
};

/// View adapter so the multisequence selectors can search a RankTree without
/// materializing it: positional access and range rank counting in O(log n).
class TreeRunView {
  public:
    explicit TreeRunView(const RankTree& t) : t_(&t) {}

    std::size_t size() const { return t_->size(); }
    Element at(std::size_t i) const { return t_->at(i); }

    std::size_t countLess(std::size_t lo, std::size_t hi, const Element& v) const {
        const std::size_t r = t_->rankLess(v);
        return std::min(std::max(r, lo), hi) - lo;
    }
    std::size_t countLeq(std::size_t lo, std::size_t hi, const Element& v) const {
        const std::size_t r = t_->rankLeq(v);
        return std::min(std::max(r, lo), hi) - lo;
    }

  private:
    const RankTree* t_;
};

}  // namespace topk
