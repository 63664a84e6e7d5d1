#include "steamnet/svg.hpp"

#include <doctest.h>

#include <regex>
#include <string>

using namespace steamnet::svg;

namespace {

int count(const std::string& text, const std::string& needle)
{
    int n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1))
        ++n;
    return n;
}

} // namespace

TEST_CASE("empty chart is a complete document with empty axes")
{
    const std::string doc = render(Chart{});
    CHECK(doc.rfind("<svg", 0) == 0);
    CHECK(doc.find("</svg>") != std::string::npos);
    CHECK(count(doc, "<polyline") == 0);
    CHECK(count(doc, "<rect") >= 2); // background and one frame
}

TEST_CASE("labels are escaped")
{
    Chart c;
    c.title = "a < b & \"c\"";
    const std::string doc = render(c);
    CHECK(doc.find("a &lt; b &amp; &quot;c&quot;") != std::string::npos);
    CHECK(doc.find("a < b") == std::string::npos);
}

TEST_CASE("step series draw a staircase")
{
    Chart c;
    Panel p;
    p.series.push_back({"u", {0.0, 1.0, 2.0}, {1.0, 2.0, 3.0}, palette(0), true});
    p.series.push_back({"y", {0.0, 1.0, 2.0}, {1.0, 2.0, 3.0}, palette(1)});
    c.panels = {p};
    const std::string doc = render(c);
    const std::regex poly("<polyline points=\"([^\"]*)\"");
    std::vector<int> points;
    for (auto it = std::sregex_iterator(doc.begin(), doc.end(), poly); it != std::sregex_iterator(); ++it)
        points.push_back(count((*it)[1].str(), ","));
    REQUIRE(points.size() == 2);
    CHECK(points[0] == 5);
    CHECK(points[1] == 3);
}

TEST_CASE("unnamed series stay out of the legend")
{
    Chart c;
    Panel p;
    p.series.push_back({"bounds", {0.0, 1.0}, {0.1, 0.1}, "#777", false, true});
    p.series.push_back({"", {0.0, 1.0}, {0.9, 0.9}, "#777", false, true});
    c.panels = {p};
    const std::string doc = render(c);
    CHECK(count(doc, "<polyline") == 2);
    CHECK(count(doc, ">bounds</text>") == 1);
    CHECK(count(doc, "stroke-width=\"2\"") == 1); // legend swatches
}

TEST_CASE("tick labels never show negative zero")
{
    Chart c;
    Panel p;
    p.bands.push_back({"a", {0.3, 0.6}, palette(0)});
    p.bands.push_back({"b", {0.7, 0.4}, palette(1)});
    p.band_x = {0.0, 10.0};
    c.panels = {p};
    const std::string doc = render(c);
    CHECK(doc.find(">-0<") == std::string::npos);
    CHECK(count(doc, "<polygon") == 2);
}
