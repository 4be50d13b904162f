#include <string>
#include <vector>

namespace geo {

template <typename T>
class Polygon {
 public:
  explicit Polygon(std::vector<T> xs) : xs_(std::move(xs)) {}
  auto size() const noexcept -> std::size_t { return xs_.size(); }

 private:
  std::vector<T> xs_;
};

}  // namespace geo

int main() {
  geo::Polygon<double> poly({1.0, 2.5, 3e8});
  auto raw = R"json({"key": "value with ) and \n"})json";
  std::string s = u8"unicode é";
  auto lambda = [&poly](int k) { return poly.size() + k; };
  constexpr int kShift = 1 << 3;
  return lambda(kShift) != 0 && raw[0] == '{' ? 0 : 1;
}
