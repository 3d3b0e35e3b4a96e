#include "clls/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace clls {

RunArg parse_run_arg(const std::string& text) {
    if (!text.empty()) {
        std::size_t i = (text[0] == '-' && text.size() > 1) ? 1 : 0;
        if (std::all_of(text.begin() + static_cast<long>(i), text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            try {
                return static_cast<std::int64_t>(std::stoll(text));
            } catch (const std::out_of_range&) {
            }
        }
    }
    return text;
}

const char* to_string(RunStatus s) {
    switch (s) {
    case RunStatus::Ok: return "ok";
    case RunStatus::Deadlock: return "deadlock";
    case RunStatus::StepLimit: return "step-limit";
    case RunStatus::RuntimeError: return "runtime-error";
    }
    return "?";
}

namespace {

class Runtime;
struct Endpoint;
struct Cell;
struct Thunk;
using TaskId = std::uint64_t;

struct RuntimeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Counted reference to a runtime object. Releasing the last one hands the
// object to the collector; nothing is freed inside the destructor itself.
template <class T>
class Handle {
public:
    Handle() = default;
    Handle(T* obj, Runtime* rt);
    Handle(const Handle& o) : Handle(o.obj_, o.rt_) {}
    Handle(Handle&& o) noexcept : obj_(o.obj_), rt_(o.rt_) { o.obj_ = nullptr; }
    Handle& operator=(Handle o) noexcept {
        std::swap(obj_, o.obj_);
        std::swap(rt_, o.rt_);
        return *this;
    }
    ~Handle();
    T* get() const { return obj_; }

private:
    T* obj_ = nullptr;
    Runtime* rt_ = nullptr;
};

using PortRef = Handle<Endpoint>;
using CellRef = Handle<Cell>;
using ThunkPtr = std::shared_ptr<Thunk>;
using Value = std::variant<std::int64_t, std::string, bool, PortRef, CellRef, ThunkPtr>;
using Env = std::map<std::string, Value>;

// A process waiting to be started: closures stored in cells and the
// templates of replicated servers.
struct Thunk {
    std::string bound;
    ProcPtr body;
    Env env;
    std::string name;
};

enum class Op { None, Send, Recv, Select, Case, Wait, Gate };

const char* op_name(Op op) {
    switch (op) {
    case Op::None: return "none";
    case Op::Send: return "send";
    case Op::Recv: return "recv";
    case Op::Select: return "select";
    case Op::Case: return "case";
    case Op::Wait: return "wait";
    case Op::Gate: return "affine";
    }
    return "?";
}

struct Endpoint {
    std::uint64_t id = 0;
    Endpoint* peer = nullptr;
    long refs = 0;
    bool dead = false;

    // Emitted toward the peer.
    bool closed = false;
    bool used = false;
    bool discarded = false;
    bool spliced = false;
    std::optional<Value> delivered;
    ThunkPtr served;

    // Pending operation of the holder.
    Op op = Op::None;
    TaskId op_task = 0;
    std::string op_chan;
    std::string label;   // select
    std::string bind;    // recv
    std::optional<Value> payload;
    ProcPtr cont;
    const node::Case* cases = nullptr;

    // Holders waiting for the peer to deliver a value or a server.
    std::vector<std::pair<TaskId, std::string>> resolvers;
    std::vector<TaskId> callers;
};

struct Waiter {
    TaskId task;
    std::string bound;
    ProcPtr cont;
};

struct Cell {
    std::uint64_t id = 0;
    long refs = 0;
    bool dead = false;
    std::optional<Value> content;
    std::deque<Waiter> waiters;
};

enum class TaskState { Runnable, Blocked, Sleeping };

struct Task {
    TaskId id = 0;
    std::string name;
    ProcPtr pc;
    Env env;
    TaskState state = TaskState::Runnable;
    bool poisoned = false;
    std::uint64_t ready_since = 0;
    std::string blocked_on;
};

enum class Next { Continue, Block, Yield, Done };

constexpr int kQuantum = 64;
constexpr std::uint64_t kAgeLimit = 4096;

class Runtime {
public:
    Runtime(const Program& prog, const RunOptions& opts) : prog_(prog), opts_(opts), rng_(opts.seed) {
        start_ = std::chrono::steady_clock::now();
    }
    ~Runtime() { shutdown(); }

    RunResult run();

    void retain(Endpoint* e) { ++e->refs; }
    void retain(Cell* c) { ++c->refs; }
    void release(Endpoint* e) {
        if (shutting_down_) return;
        if (--e->refs == 0) dead_eps_.push_back(e->id);
    }
    void release(Cell* c) {
        if (shutting_down_) return;
        if (--c->refs == 0) dead_cells_.push_back(c);
    }

private:
    // --- objects -------------------------------------------------------
    std::pair<PortRef, PortRef> new_channel() {
        auto a = std::make_unique<Endpoint>();
        auto b = std::make_unique<Endpoint>();
        a->id = next_obj_++;
        b->id = next_obj_++;
        a->peer = b.get();
        b->peer = a.get();
        PortRef ra(a.get(), this), rb(b.get(), this);
        eps_.emplace(a->id, std::move(a));
        eps_.emplace(b->id, std::move(b));
        return {std::move(ra), std::move(rb)};
    }

    CellRef new_cell(Value content) {
        auto c = std::make_unique<Cell>();
        c->id = next_obj_++;
        c->content = std::move(content);
        CellRef r(c.get(), this);
        cells_.emplace(c->id, std::move(c));
        return r;
    }

    void free_endpoint(Endpoint* e, std::vector<Value>& grave) {
        if (e->delivered) grave.push_back(std::move(*e->delivered));
        if (e->payload) grave.push_back(std::move(*e->payload));
        if (e->served) grave.push_back(std::move(e->served));
        if (e->peer && e->peer->peer == e) e->peer->peer = nullptr;
        eps_.erase(e->id);
    }

    // Frees everything whose last reference went away. Values released
    // while freeing are handled in the same loop.
    void collect() {
        while (!dead_eps_.empty() || !dead_cells_.empty()) {
            std::vector<Value> grave;
            if (!dead_eps_.empty()) {
                auto it = eps_.find(dead_eps_.back());
                dead_eps_.pop_back();
                if (it == eps_.end() || it->second->refs > 0) continue;
                Endpoint* e = it->second.get();
                if (!e->dead) {
                    e->dead = true;
                    if (!e->closed && !e->delivered && !e->served && !e->spliced) e->discarded = true;
                    e->op = Op::None;
                    if (e->payload) {
                        grave.push_back(std::move(*e->payload));
                        e->payload.reset();
                    }
                    if (e->peer && !e->peer->dead) settle(e->peer);
                }
                Endpoint* p = e->peer;
                if (!p || p->dead) {
                    free_endpoint(e, grave);
                    if (p) free_endpoint(p, grave);
                }
            } else {
                Cell* c = dead_cells_.back();
                dead_cells_.pop_back();
                if (c->refs > 0 || c->dead) continue;
                c->dead = true;
                if (c->content) grave.push_back(std::move(*c->content));
                cells_.erase(c->id);
            }
            grave.clear();
        }
    }

    void shutdown() {
        shutting_down_ = true;
        tasks_.clear();
        ready_.clear();
        sleepers_.clear();
        eps_.clear();
        cells_.clear();
    }

    // --- tasks ---------------------------------------------------------
    Task* find_task(TaskId id) {
        auto it = tasks_.find(id);
        return it == tasks_.end() ? nullptr : it->second.get();
    }

    TaskId spawn(std::string name, ProcPtr body, Env env) {
        auto t = std::make_unique<Task>();
        t->id = next_task_++;
        t->name = std::move(name);
        t->pc = std::move(body);
        t->env = std::move(env);
        t->ready_since = steps_;
        TaskId id = t->id;
        tasks_.emplace(id, std::move(t));
        ready_.push_back(id);
        ++spawned_;
        return id;
    }

    void wake(Task& t) {
        if (t.state == TaskState::Runnable) return;
        t.state = TaskState::Runnable;
        t.blocked_on.clear();
        t.ready_since = steps_;
        if (t.id != current_) ready_.push_back(t.id);
    }

    void block(Task& t, std::string why) {
        t.state = TaskState::Blocked;
        t.blocked_on = std::move(why);
    }

    void poison(Task& t) {
        t.poisoned = true;
        wake(t);
    }

    const std::set<std::string>& fn(const ProcPtr& p) {
        auto it = fn_cache_.find(p.get());
        if (it != fn_cache_.end()) return it->second;
        return fn_cache_.emplace(p.get(), free_names(p)).first->second;
    }

    // Moves the names `p` needs out of `env`; names that `rest` still needs
    // are copied instead.
    Env split(Env& env, const std::set<std::string>& names, const std::set<std::string>& rest,
              const std::string& skip = {}) {
        Env out;
        for (auto& n : names) {
            if (n == skip) continue;
            auto it = env.find(n);
            if (it == env.end()) continue;
            if (rest.count(n)) {
                out.emplace(n, it->second);
            } else {
                out.emplace(n, std::move(it->second));
                env.erase(it);
            }
        }
        return out;
    }

    // --- channel matching ----------------------------------------------
    void finish(Endpoint* x) {
        Task* t = find_task(x->op_task);
        x->op = Op::None;
        x->cases = nullptr;
        ProcPtr cont = std::move(x->cont);
        if (!t) return;
        t->pc = std::move(cont);
        wake(*t);
    }

    static bool active(const Endpoint* y) {
        return (y->op != Op::None && y->op != Op::Gate) || y->used || y->closed || y->delivered ||
               !y->resolvers.empty() || !y->callers.empty();
    }

    bool try_side(Endpoint* x, Endpoint* y) {
        bool changed = false;
        if (!x->resolvers.empty() && y->delivered) {
            auto rs = std::move(x->resolvers);
            x->resolvers.clear();
            for (auto& [tid, name] : rs) {
                Task* t = find_task(tid);
                if (!t) continue;
                auto it = t->env.find(name);
                if (it == t->env.end()) continue;
                auto* port = std::get_if<PortRef>(&it->second);
                if (!port || port->get() != x) continue;
                it->second = *y->delivered;
                wake(*t);
            }
            changed = true;
        }
        if (!x->callers.empty() && y->served) {
            auto cs = std::move(x->callers);
            x->callers.clear();
            for (TaskId tid : cs)
                if (Task* t = find_task(tid)) wake(*t);
            changed = true;
        }
        switch (x->op) {
        case Op::None: break;
        case Op::Send:
            if (y->op == Op::Recv) {
                Task* rt = find_task(y->op_task);
                if (rt) rt->env.insert_or_assign(y->bind, std::move(*x->payload));
                x->payload.reset();
                finish(y);
                finish(x);
                changed = true;
            }
            break;
        case Op::Select:
            if (y->op == Op::Case) {
                const node::CaseBranch* hit = nullptr;
                for (auto& b : y->cases->branches)
                    if (b.label == x->label) hit = &b;
                if (!hit) throw RuntimeError("no branch for label #" + x->label);
                y->cont = hit->body;
                finish(y);
                finish(x);
                changed = true;
            }
            break;
        case Op::Wait:
            if (y->closed) {
                if (Task* t = find_task(x->op_task)) t->env.erase(x->op_chan);
                finish(x);
                changed = true;
            }
            break;
        case Op::Gate:
            if (y->discarded) {
                x->op = Op::None;
                x->cont.reset();
                if (Task* t = find_task(x->op_task)) poison(*t);
                changed = true;
            } else if (active(y)) {
                y->used = false;
                finish(x);
                changed = true;
            }
            break;
        case Op::Recv:
        case Op::Case:
            break;
        }
        return changed;
    }

    void settle(Endpoint* a) {
        bool progress = true;
        while (progress) {
            Endpoint* b = a->peer;
            if (!b) return;
            bool l = try_side(a, b);
            bool r = try_side(b, a);
            progress = l || r;
        }
    }

    // Joins the far ends of x and y; x and y leave the picture.
    void splice(Endpoint* x, Endpoint* y) {
        Endpoint* xp = x->peer;
        Endpoint* yp = y->peer;
        if (yp) yp->used = yp->used || x->used;
        if (xp) xp->used = xp->used || y->used;
        if (xp) xp->peer = yp;
        if (yp) yp->peer = xp;
        x->peer = y->peer = nullptr;
        x->spliced = y->spliced = true;
        // Two ends that were already dead meet only here.
        if (xp && xp->dead) dead_eps_.push_back(xp->id);
        if (yp && yp->dead) dead_eps_.push_back(yp->id);
        if (xp) settle(xp);
        if (yp) settle(yp);
    }

    void deliver(Endpoint* e, Value v) {
        e->delivered = std::move(v);
        settle(e);
    }

    // --- expressions ---------------------------------------------------
    Endpoint* port_of(const Value& v) {
        auto* p = std::get_if<PortRef>(&v);
        return p ? p->get() : nullptr;
    }

    Value& lookup(Task& t, const std::string& name) {
        auto it = t.env.find(name);
        if (it == t.env.end()) throw RuntimeError("name '" + name + "' is not bound in task " + std::to_string(t.id));
        return it->second;
    }

    // Replaces a port-bound name with the value its peer delivers. Returns
    // false and blocks the task when the value is not there yet.
    bool resolve(Task& t, const std::string& name) {
        Value& v = lookup(t, name);
        Endpoint* e = port_of(v);
        if (!e) return true;
        if (e->peer && e->peer->delivered) {
            v = *e->peer->delivered;
            return true;
        }
        e->resolvers.emplace_back(t.id, name);
        block(t, "value of " + name);
        settle(e);
        if (t.state == TaskState::Runnable) return resolve(t, name);
        return false;
    }

    static void expr_names(const ExprPtr& e, std::vector<std::string>& out) {
        if (!e) return;
        if (e->kind == Expr::Kind::Name) out.push_back(e->text);
        expr_names(e->lhs, out);
        expr_names(e->rhs, out);
    }

    bool resolve_expr(Task& t, const ExprPtr& e) {
        std::vector<std::string> names;
        expr_names(e, names);
        for (auto& n : names)
            if (!resolve(t, n)) return false;
        return true;
    }

    static std::string display(const Value& v) {
        if (auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
        if (auto* s = std::get_if<std::string>(&v)) return *s;
        if (auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
        if (std::holds_alternative<CellRef>(v)) return "<cell>";
        return "<channel>";
    }

    static std::int64_t as_int(const Value& v, const Span& sp) {
        if (auto* i = std::get_if<std::int64_t>(&v)) return *i;
        throw RuntimeError(sp.file + ":" + std::to_string(sp.line) + ": expected an integer, got '" + display(v) + "'");
    }

    Value eval(Task& t, const ExprPtr& e) {
        switch (e->kind) {
        case Expr::Kind::Int: return e->int_value;
        case Expr::Kind::Str: return e->text;
        case Expr::Kind::Name: return lookup(t, e->text);
        case Expr::Kind::Binary: break;
        }
        Value a = eval(t, e->lhs);
        Value b = eval(t, e->rhs);
        std::int64_t r = 0;
        auto overflow = [&]() -> RuntimeError {
            return RuntimeError(e->span.file + ":" + std::to_string(e->span.line) + ": integer overflow");
        };
        switch (e->op) {
        case BinOp::Add:
            if (std::holds_alternative<std::string>(a) || std::holds_alternative<std::string>(b))
                return display(a) + display(b);
            if (__builtin_add_overflow(as_int(a, e->span), as_int(b, e->span), &r)) throw overflow();
            return r;
        case BinOp::Sub:
            if (__builtin_sub_overflow(as_int(a, e->span), as_int(b, e->span), &r)) throw overflow();
            return r;
        case BinOp::Mul:
            if (__builtin_mul_overflow(as_int(a, e->span), as_int(b, e->span), &r)) throw overflow();
            return r;
        case BinOp::Mod: {
            std::int64_t x = as_int(a, e->span), y = as_int(b, e->span);
            if (y == 0)
                throw RuntimeError(e->span.file + ":" + std::to_string(e->span.line) + ": mod by zero");
            if (y == -1) return std::int64_t{0};
            return x % y;
        }
        case BinOp::Eq:
            if (a.index() != b.index()) return false;
            return display(a) == display(b);
        }
        return false;
    }

    // --- arguments -----------------------------------------------------
    Value closure(Task& t, const Arg& a, const ProcPtr& next) {
        static const std::set<std::string> none;
        auto th = std::make_shared<Thunk>();
        th->bound = a.bound;
        th->body = a.body;
        th->env = split(t.env, fn(a.body), next ? fn(next) : none, a.bound);
        th->name = t.name + ".closure";
        return th;
    }

    // Turns a stored closure into a running process and returns its channel.
    Value open(Value v) {
        auto* th = std::get_if<ThunkPtr>(&v);
        if (!th) return v;
        ThunkPtr p = std::move(*th);
        auto [mine, theirs] = new_channel();
        Env env = p.use_count() == 1 ? std::move(p->env) : p->env;
        env.insert_or_assign(p->bound, std::move(theirs));
        TaskId id = spawn(p->name, p->body, std::move(env));
        emit("spawn", std::to_string(id));
        return std::move(mine);
    }

    // Value of a send/put/cell argument. Names free in `next` are copied.
    std::optional<Value> argument(Task& t, const Arg& a, const ProcPtr& next) {
        switch (a.kind) {
        case Arg::Kind::Value:
            // A bare name may stand for a channel; it travels unresolved.
            if (a.expr->kind == Expr::Kind::Name) break;
            if (!resolve_expr(t, a.expr)) return std::nullopt;
            return eval(t, a.expr);
        case Arg::Kind::Name: break;
        case Arg::Kind::Closure: return closure(t, a, next);
        }
        const std::string& name = a.kind == Arg::Kind::Name ? a.name : a.expr->text;
        auto it = t.env.find(name);
        if (it == t.env.end()) throw RuntimeError("name '" + name + "' is not bound");
        if (next && fn(next).count(name)) return it->second;
        Value v = std::move(it->second);
        t.env.erase(it);
        return v;
    }

    // --- tracing and output --------------------------------------------
    void emit(const char* event, const std::string& args) {
        if (!opts_.trace) return;
        *opts_.trace << "step " << steps_ << " task " << current_ << " " << event;
        if (!args.empty()) *opts_.trace << " " << args;
        *opts_.trace << "\n";
    }

    void print(const std::string& s) {
        output_ += s;
        if (opts_.out) {
            *opts_.out << s;
            opts_.out->flush();
        }
    }

    std::uint64_t now() const {
        if (!opts_.wall_clock) return tick_;
        auto d = std::chrono::steady_clock::now() - start_;
        return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(d).count());
    }

    // --- execution -----------------------------------------------------
    Endpoint* endpoint(Task& t, const std::string& name) {
        Endpoint* e = port_of(lookup(t, name));
        if (!e) throw RuntimeError("'" + name + "' is not a channel");
        return e;
    }

    Next pend(Task& t, Endpoint* e, Op op, ProcPtr cont, const std::string& chan) {
        e->op = op;
        e->op_task = t.id;
        e->op_chan = chan;
        e->cont = std::move(cont);
        block(t, std::string(op_name(op)) + " " + chan);
        settle(e);
        return t.state == TaskState::Runnable ? Next::Continue : Next::Block;
    }

    Next step(Task& t);
    bool schedule_once();
    TaskId pick();

    const Program& prog_;
    RunOptions opts_;
    std::mt19937_64 rng_;
    std::chrono::steady_clock::time_point start_;

    std::unordered_map<std::uint64_t, std::unique_ptr<Endpoint>> eps_;
    std::unordered_map<std::uint64_t, std::unique_ptr<Cell>> cells_;
    std::map<TaskId, std::unique_ptr<Task>> tasks_;
    std::vector<TaskId> ready_;
    std::set<std::pair<std::uint64_t, TaskId>> sleepers_;
    std::vector<std::uint64_t> dead_eps_;
    std::vector<Cell*> dead_cells_;
    std::unordered_map<const Process*, std::set<std::string>> fn_cache_;

    bool shutting_down_ = false;
    std::uint64_t next_obj_ = 1;
    TaskId next_task_ = 1;
    TaskId current_ = 0;
    std::uint64_t steps_ = 0;
    std::uint64_t tick_ = 0;
    std::uint64_t spawned_ = 0;
    std::string output_;
    RunStatus status_ = RunStatus::Ok;
    std::string message_;
    bool finished_ = false;
};

template <class T>
Handle<T>::Handle(T* obj, Runtime* rt) : obj_(obj), rt_(rt) {
    if (obj_) rt_->retain(obj_);
}

template <class T>
Handle<T>::~Handle() {
    if (obj_) rt_->release(obj_);
}

Next Runtime::step(Task& t) {
    if (t.poisoned) {
        emit("cancel", t.name);
        t.env.clear();
        return Next::Done;
    }
    ProcPtr cur = t.pc;
    const ProcessNode& node = cur->node;

    if (std::holds_alternative<node::Inert>(node)) {
        emit("end", t.name);
        return Next::Done;
    }
    if (auto* n = std::get_if<node::Forward>(&node)) {
        Endpoint* pa = port_of(lookup(t, n->a));
        Endpoint* pb = port_of(lookup(t, n->b));
        if (pa && pb && (pa->refs > 1 || pb->refs > 1)) {
            // Other holders still read a shared port, so it cannot be spliced
            // away; what it resolves to is passed on instead.
            Endpoint* s = pb->refs > 1 ? pb : pa;
            Endpoint* o = s == pb ? pa : pb;
            if (s->peer && s->peer->served) {
                emit("fwd", n->a + " " + n->b);
                o->served = s->peer->served;
                settle(o);
                t.env.erase(n->a);
                t.env.erase(n->b);
                return Next::Done;
            }
            if (!resolve(t, s == pb ? n->b : n->a)) {
                s->callers.push_back(t.id);
                return Next::Block;
            }
        }
        emit("fwd", n->a + " " + n->b);
        Value a = std::move(lookup(t, n->a));
        Value b = std::move(lookup(t, n->b));
        t.env.erase(n->a);
        t.env.erase(n->b);
        Endpoint* ea = port_of(a);
        Endpoint* eb = port_of(b);
        if (ea && eb) splice(ea, eb);
        else if (ea) deliver(ea, std::move(b));
        else if (eb) deliver(eb, std::move(a));
        else throw RuntimeError("forward between two values");
        return Next::Done;
    }
    if (auto* n = std::get_if<node::Par>(&node)) {
        Env env = split(t.env, fn(n->left), fn(n->right));
        TaskId id = spawn(t.name, n->left, std::move(env));
        emit("spawn", std::to_string(id));
        t.pc = n->right;
        return Next::Yield;
    }
    if (auto* n = std::get_if<node::Cut>(&node)) {
        auto [left, right] = new_channel();
        std::set<std::string> rest = fn(n->right);
        rest.erase(n->chan);
        Env env = split(t.env, fn(n->left), rest, n->chan);
        env.insert_or_assign(n->chan, std::move(left));
        TaskId id = spawn(t.name, n->left, std::move(env));
        emit("spawn", std::to_string(id));
        t.env.insert_or_assign(n->chan, std::move(right));
        t.pc = n->right;
        return Next::Yield;
    }
    if (auto* n = std::get_if<node::Share>(&node)) {
        Env env = split(t.env, fn(n->left), fn(n->right));
        TaskId id = spawn(t.name, n->left, std::move(env));
        emit("spawn", std::to_string(id));
        t.pc = n->right;
        return Next::Yield;
    }
    if (auto* n = std::get_if<node::Call>(&node)) {
        const ProcDecl* callee = prog_.find(n->name);
        if (!callee) throw RuntimeError("unknown procedure '" + n->name + "'");
        for (auto& e : n->exponential)
            if (e->kind != Expr::Kind::Name && !resolve_expr(t, e)) return Next::Block;
        Env env;
        for (std::size_t i = 0; i < n->exponential.size() && i < callee->exponential.size(); ++i) {
            auto& e = n->exponential[i];
            Value v = e->kind == Expr::Kind::Name ? lookup(t, e->text) : eval(t, e);
            env.insert_or_assign(callee->exponential[i].name, std::move(v));
        }
        for (std::size_t i = 0; i < n->linear.size() && i < callee->linear.size(); ++i) {
            auto it = t.env.find(n->linear[i]);
            if (it == t.env.end()) throw RuntimeError("name '" + n->linear[i] + "' is not bound");
            env.insert_or_assign(callee->linear[i].name, std::move(it->second));
            t.env.erase(it);
        }
        emit("call", n->name);
        t.env = std::move(env);
        t.name = n->name;
        t.pc = callee->body;
        return Next::Continue;
    }
    if (auto* n = std::get_if<node::Send>(&node)) {
        Endpoint* e = endpoint(t, n->chan);
        auto v = argument(t, n->arg, n->next);
        if (!v) return Next::Block;
        if (n->arg.kind == Arg::Kind::Closure) v = open(std::move(*v));
        emit("send", n->chan);
        e->payload = std::move(*v);
        return pend(t, e, Op::Send, n->next, n->chan);
    }
    if (auto* n = std::get_if<node::Recv>(&node)) {
        Endpoint* e = endpoint(t, n->chan);
        emit("recv", n->chan);
        e->bind = n->bound;
        return pend(t, e, Op::Recv, n->next, n->chan);
    }
    if (auto* n = std::get_if<node::Select>(&node)) {
        Endpoint* e = endpoint(t, n->chan);
        emit("select", n->chan + " #" + n->label);
        e->label = n->label;
        return pend(t, e, Op::Select, n->next, n->chan);
    }
    if (auto* n = std::get_if<node::Case>(&node)) {
        Endpoint* e = endpoint(t, n->chan);
        emit("case", n->chan);
        e->cases = n;
        return pend(t, e, Op::Case, nullptr, n->chan);
    }
    if (auto* n = std::get_if<node::Close>(&node)) {
        Endpoint* e = endpoint(t, n->chan);
        emit("close", n->chan);
        e->closed = true;
        settle(e);
        t.env.erase(n->chan);
        t.pc = n->next;
        return Next::Continue;
    }
    if (auto* n = std::get_if<node::Wait>(&node)) {
        Endpoint* e = endpoint(t, n->chan);
        emit("wait", n->chan);
        return pend(t, e, Op::Wait, n->next, n->chan);
    }
    if (auto* n = std::get_if<node::Serve>(&node)) {
        Endpoint* e = endpoint(t, n->chan);
        emit("serve", n->chan);
        auto th = std::make_shared<Thunk>();
        th->bound = n->bound;
        th->body = n->body;
        th->env = split(t.env, fn(n->body), {}, n->bound);
        th->env.erase(n->chan);
        th->name = t.name + ".server";
        e->served = std::move(th);
        settle(e);
        t.env.clear();
        return Next::Done;
    }
    if (auto* n = std::get_if<node::CallRepl>(&node)) {
        Endpoint* e = endpoint(t, n->chan);
        if (e->peer && e->peer->served) {
            const Thunk& th = *e->peer->served;
            auto [mine, theirs] = new_channel();
            Env env = th.env;
            env.insert_or_assign(th.bound, std::move(theirs));
            TaskId id = spawn(th.name, th.body, std::move(env));
            emit("call", n->chan + " " + std::to_string(id));
            t.env.insert_or_assign(n->bound, std::move(mine));
            t.pc = n->next;
            return Next::Yield;
        }
        e->callers.push_back(t.id);
        block(t, "server " + n->chan);
        settle(e);
        return t.state == TaskState::Runnable ? Next::Continue : Next::Block;
    }
    if (auto* n = std::get_if<node::AffineIntro>(&node)) {
        Endpoint* e = endpoint(t, n->chan);
        emit("affine", n->chan);
        if (!e->peer) {
            poison(t);
            return Next::Continue;
        }
        return pend(t, e, Op::Gate, n->next, n->chan);
    }
    if (auto* n = std::get_if<node::Use>(&node)) {
        Endpoint* e = endpoint(t, n->chan);
        emit("use", n->chan);
        e->used = true;
        settle(e);
        t.pc = n->next;
        return Next::Continue;
    }
    auto drop = [&](const std::string& chan, const char* what) {
        emit(what, chan);
        t.env.erase(chan);
    };
    if (auto* n = std::get_if<node::Discard>(&node)) {
        drop(n->chan, "discard");
        t.pc = n->next;
        return Next::Continue;
    }
    if (auto* n = std::get_if<node::Drop>(&node)) {
        drop(n->chan, "drop");
        t.pc = n->next;
        return Next::Continue;
    }
    if (auto* n = std::get_if<node::Release>(&node)) {
        drop(n->chan, "drop");
        t.pc = n->next;
        return Next::Continue;
    }
    if (auto* n = std::get_if<node::CellNew>(&node)) {
        Endpoint* e = endpoint(t, n->chan);
        std::optional<Value> v;
        if (n->init.kind == Arg::Kind::Closure) v = closure(t, n->init, nullptr);
        else v = argument(t, n->init, nullptr);
        if (!v) return Next::Block;
        CellRef c = new_cell(std::move(*v));
        emit("cell", n->chan + " " + std::to_string(c.get()->id));
        t.env.erase(n->chan);
        deliver(e, std::move(c));
        t.env.clear();
        return Next::Done;
    }
    if (auto* n = std::get_if<node::Take>(&node)) {
        if (!resolve(t, n->chan)) return Next::Block;
        auto* ref = std::get_if<CellRef>(&lookup(t, n->chan));
        if (!ref) throw RuntimeError("'" + n->chan + "' is not a cell");
        Cell* c = ref->get();
        if (c->content && c->waiters.empty()) {
            emit("take", std::to_string(c->id));
            Value v = std::move(*c->content);
            c->content.reset();
            t.env.insert_or_assign(n->bound, open(std::move(v)));
            t.pc = n->next;
            return Next::Continue;
        }
        emit("take-wait", std::to_string(c->id));
        c->waiters.push_back(Waiter{t.id, n->bound, n->next});
        block(t, "take " + n->chan);
        return Next::Block;
    }
    if (auto* n = std::get_if<node::Put>(&node)) {
        if (!resolve(t, n->chan)) return Next::Block;
        auto* ref = std::get_if<CellRef>(&lookup(t, n->chan));
        if (!ref) throw RuntimeError("'" + n->chan + "' is not a cell");
        Cell* c = ref->get();
        std::optional<Value> v;
        if (n->arg.kind == Arg::Kind::Closure) v = closure(t, n->arg, n->next);
        else v = argument(t, n->arg, n->next);
        if (!v) return Next::Block;
        emit("put", std::to_string(c->id));
        c->content = std::move(*v);
        while (!c->waiters.empty()) {
            Waiter w = std::move(c->waiters.front());
            c->waiters.pop_front();
            Task* wt = find_task(w.task);
            if (!wt) continue;
            emit("grant", std::to_string(c->id) + " " + std::to_string(wt->id));
            Value got = std::move(*c->content);
            c->content.reset();
            wt->env.insert_or_assign(w.bound, open(std::move(got)));
            wt->pc = w.cont;
            wake(*wt);
            break;
        }
        t.pc = n->next;
        return Next::Continue;
    }
    if (auto* n = std::get_if<node::If>(&node)) {
        if (!resolve_expr(t, n->cond)) return Next::Block;
        Value v = eval(t, n->cond);
        bool c;
        if (auto* b = std::get_if<bool>(&v)) c = *b;
        else c = as_int(v, cur->span) != 0;
        emit("if", c ? "then" : "else");
        t.pc = c ? n->then_branch : n->else_branch;
        return Next::Continue;
    }
    if (auto* n = std::get_if<node::Print>(&node)) {
        if (!resolve_expr(t, n->expr)) return Next::Block;
        std::string s = display(eval(t, n->expr));
        if (n->newline) s += "\n";
        emit("print", "");
        print(s);
        t.pc = n->next;
        return Next::Continue;
    }
    if (auto* n = std::get_if<node::Sleep>(&node)) {
        if (!resolve_expr(t, n->ticks)) return Next::Block;
        std::int64_t d = as_int(eval(t, n->ticks), cur->span);
        emit("sleep", std::to_string(d));
        t.pc = n->next;
        if (d <= 0) return Next::Yield;
        t.state = TaskState::Sleeping;
        t.blocked_on = "sleep";
        sleepers_.emplace(now() + static_cast<std::uint64_t>(d), t.id);
        return Next::Block;
    }
    if (std::holds_alternative<node::LetC>(node)) throw RuntimeError("letc reached the runtime undesugared");
    throw RuntimeError("unhandled process form");
}

TaskId Runtime::pick() {
    std::size_t idx = 0;
    std::size_t oldest = 0;
    for (std::size_t i = 1; i < ready_.size(); ++i) {
        Task* a = find_task(ready_[i]);
        Task* b = find_task(ready_[oldest]);
        if (a && b && a->ready_since < b->ready_since) oldest = i;
    }
    Task* o = find_task(ready_[oldest]);
    if (o && steps_ - o->ready_since > kAgeLimit) idx = oldest;
    else idx = static_cast<std::size_t>(rng_() % ready_.size());
    TaskId id = ready_[idx];
    ready_[idx] = ready_.back();
    ready_.pop_back();
    return id;
}

// One scheduling decision. Returns false once the run is over.
bool Runtime::schedule_once() {
    collect();
    std::uint64_t t_now = now();
    while (!sleepers_.empty() && sleepers_.begin()->first <= t_now) {
        TaskId id = sleepers_.begin()->second;
        sleepers_.erase(sleepers_.begin());
        if (Task* t = find_task(id)) {
            t->state = TaskState::Blocked;
            wake(*t);
        }
    }
    if (ready_.empty()) {
        if (!sleepers_.empty()) {
            std::uint64_t wake_at = sleepers_.begin()->first;
            if (opts_.wall_clock)
                std::this_thread::sleep_for(std::chrono::milliseconds(wake_at - t_now));
            else
                tick_ = wake_at;
            return true;
        }
        if (!tasks_.empty()) {
            status_ = RunStatus::Deadlock;
            std::ostringstream os;
            os << tasks_.size() << " blocked task(s)";
            for (auto& [id, t] : tasks_) os << "\n  task " << id << " (" << t->name << ") waits on " << t->blocked_on;
            message_ = os.str();
        }
        return false;
    }
    TaskId id = pick();
    Task* t = find_task(id);
    if (!t) return true;
    current_ = id;
    t->state = TaskState::Runnable;
    for (int q = 0; q < kQuantum; ++q) {
        if (steps_ >= opts_.max_steps) {
            status_ = RunStatus::StepLimit;
            message_ = "step budget of " + std::to_string(opts_.max_steps) + " exhausted";
            current_ = 0;
            return false;
        }
        Next r = step(*t);
        ++steps_;
        if (!opts_.wall_clock) ++tick_;
        if (r == Next::Done) {
            current_ = 0;
            tasks_.erase(id);
            collect();
            return true;
        }
        collect();
        if (r == Next::Continue && t->state == TaskState::Runnable) continue;
        current_ = 0;
        if (r == Next::Yield || t->state == TaskState::Runnable) {
            t->ready_since = steps_;
            ready_.push_back(id);
        }
        return true;
    }
    current_ = 0;
    t->ready_since = steps_;
    ready_.push_back(id);
    return true;
}

RunResult Runtime::run() {
    RunResult res;
    try {
        const ProcDecl* entry = prog_.find(opts_.entry);
        if (!entry) throw RuntimeError("no procedure named '" + opts_.entry + "'");
        if (!entry->linear.empty())
            throw RuntimeError("entry '" + opts_.entry + "' must not take linear parameters");
        if (entry->exponential.size() != opts_.args.size())
            throw RuntimeError("entry '" + opts_.entry + "' expects " + std::to_string(entry->exponential.size()) +
                               " argument(s), got " + std::to_string(opts_.args.size()));
        Env env;
        for (std::size_t i = 0; i < opts_.args.size(); ++i)
            std::visit([&](const auto& a) { env.insert_or_assign(entry->exponential[i].name, Value(a)); },
                       opts_.args[i]);
        spawn(entry->name, entry->body, std::move(env));

        if (opts_.workers <= 1) {
            while (schedule_once()) {
            }
        } else {
            // Workers take turns under one lock; a decision never overlaps
            // another, so the schedule is still a function of the seed.
            std::mutex mu;
            auto worker = [&]() {
                for (;;) {
                    std::lock_guard<std::mutex> lk(mu);
                    if (finished_) return;
                    if (!schedule_once()) finished_ = true;
                }
            };
            std::vector<std::thread> pool;
            for (unsigned i = 0; i < opts_.workers; ++i) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
        collect();
    } catch (const RuntimeError& e) {
        status_ = RunStatus::RuntimeError;
        message_ = e.what();
    } catch (const std::bad_variant_access&) {
        status_ = RunStatus::RuntimeError;
        message_ = "value of the wrong kind";
    }
    res.status = status_;
    res.message = message_;
    res.output = output_;
    res.steps = steps_;
    res.tasks_spawned = spawned_;
    res.leaks.tasks = tasks_.size();
    res.leaks.endpoints = eps_.size();
    res.leaks.cells = cells_.size();
    return res;
}

} // namespace

RunResult run_program(const Program& prog, const RunOptions& opts) {
    Runtime rt(prog, opts);
    return rt.run();
}

} // namespace clls
